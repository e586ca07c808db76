/* tslint:disable */
/* eslint-disable */

/**
 * An explored path together with its training data.
 */
export class Explorer {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * The whole path as a JSON document.
     */
    exportJson(): string;
    /**
     * Data in the sparse `label index:value` text format.
     */
    static fromText(text: string, b_const: number): Explorer;
    /**
     * Two Gaussian classes in the plane.
     */
    constructor(n_plus: number, n_minus: number, shift: number, seed: bigint);
    /**
     * Raw training points as JSON `[[x, y, label], ...]`.
     */
    points(): string;
    /**
     * Model at a cost pair as JSON: facet, active-set key, weights and the
     * training labels it predicts.
     */
    query(c_plus: number, c_minus: number): string;
    setWindow(c_plus: number, c_minus: number): void;
    /**
     * Counts as JSON: facets, edges, vertices, layers, unexplored.
     */
    summary(): string;
    /**
     * SVG of the facets in the current window. `events` is empty, `all`,
     * or comma-separated sample indices.
     */
    svg(width: number, height: number, events: string, means: boolean): string;
    windowMinus(): number;
    windowPlus(): number;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_explorer_free: (a: number, b: number) => void;
    readonly explorer_exportJson: (a: number) => [number, number, number, number];
    readonly explorer_fromText: (a: number, b: number, c: number) => [number, number, number];
    readonly explorer_new: (a: number, b: number, c: number, d: bigint) => [number, number, number];
    readonly explorer_points: (a: number) => [number, number];
    readonly explorer_query: (a: number, b: number, c: number) => [number, number, number, number];
    readonly explorer_setWindow: (a: number, b: number, c: number) => void;
    readonly explorer_summary: (a: number) => [number, number];
    readonly explorer_svg: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly explorer_windowMinus: (a: number) => number;
    readonly explorer_windowPlus: (a: number) => number;
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
