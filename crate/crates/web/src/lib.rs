//! WebAssembly bindings for the browser demo in `www/`.

use acpath::explorer::default_window;
use acpath::io::{self, EventSelection, RenderOptions};
use acpath::query::{self, Located};
use acpath::{dataset, Costs, Dataset, ExploreConfig, PathGraph};
use serde_json::json;
use wasm_bindgen::prelude::*;

/// An explored path together with its training data.
#[wasm_bindgen]
pub struct Explorer {
    data: Dataset,
    graph: PathGraph,
    window: (f64, f64),
}

fn explore(data: Dataset) -> Result<Explorer, JsError> {
    let cfg = ExploreConfig {
        parallel: false,
        ..Default::default()
    };
    let graph = acpath::run(&data, &cfg).map_err(|e| JsError::new(&e.to_string()))?;
    let window = default_window(&graph);
    Ok(Explorer { data, graph, window })
}

#[wasm_bindgen]
impl Explorer {
    /// Two Gaussian classes in the plane.
    #[wasm_bindgen(constructor)]
    pub fn new(n_plus: usize, n_minus: usize, shift: f64, seed: u64) -> Result<Explorer, JsError> {
        if n_plus == 0 || n_minus == 0 {
            return Err(JsError::new("each class needs at least one sample"));
        }
        explore(dataset::gaussian_classes(n_plus, n_minus, 2, shift, dataset::DEFAULT_B_CONST, seed))
    }

    /// Data in the sparse `label index:value` text format.
    #[wasm_bindgen(js_name = fromText)]
    pub fn from_text(text: &str, b_const: f64) -> Result<Explorer, JsError> {
        let data = io::parse_dataset(text, b_const).map_err(|e| JsError::new(&e.to_string()))?;
        explore(data)
    }

    #[wasm_bindgen(js_name = windowPlus)]
    pub fn window_plus(&self) -> f64 {
        self.window.0
    }

    #[wasm_bindgen(js_name = windowMinus)]
    pub fn window_minus(&self) -> f64 {
        self.window.1
    }

    #[wasm_bindgen(js_name = setWindow)]
    pub fn set_window(&mut self, c_plus: f64, c_minus: f64) {
        if c_plus > 0.0 && c_minus > 0.0 {
            self.window = (c_plus, c_minus);
        }
    }

    /// Counts as JSON: facets, edges, vertices, layers, unexplored.
    pub fn summary(&self) -> String {
        let g = &self.graph;
        json!({
            "samples": self.data.n(),
            "positives": self.data.n_plus(),
            "facets": g.facets.len(),
            "edges": g.edges.len(),
            "vertices": g.live_vertices().count(),
            "layers": g.num_layers(),
            "unexplored": g.unexplored.len(),
        })
        .to_string()
    }

    /// SVG of the facets in the current window. `events` is empty, `all`,
    /// or comma-separated sample indices.
    pub fn svg(&self, width: f64, height: f64, events: &str, means: bool) -> Result<String, JsError> {
        let events = match events.trim() {
            "" => EventSelection::None,
            "all" => EventSelection::All,
            list => EventSelection::Samples(
                list.split(',')
                    .map(|s| s.trim().parse::<usize>())
                    .collect::<Result<_, _>>()
                    .map_err(|e| JsError::new(&format!("sample list: {e}")))?,
            ),
        };
        let opts = RenderOptions {
            width,
            height,
            facet_means: means,
            events,
        };
        Ok(io::render_svg(&self.graph, self.window, &opts))
    }

    /// Model at a cost pair as JSON: facet, active-set key, weights and the
    /// training labels it predicts.
    pub fn query(&self, c_plus: f64, c_minus: f64) -> Result<String, JsError> {
        let c = Costs::new(c_plus, c_minus);
        let err = |e: query::QueryError| JsError::new(&e.to_string());
        let located = query::locate_facet(&self.graph, c).map_err(err)?;
        if located == Located::Unexplored {
            return Ok(json!({ "c": [c_plus, c_minus], "located": located }).to_string());
        }
        let m = query::evaluate(&self.graph, &self.data, c).map_err(err)?;
        let mut correct = 0;
        for i in 0..self.data.n() {
            let (x, positive) = self.data.raw_sample(i);
            let (label, _) = query::predict(&m.beta, &x, self.data.b_const()).map_err(err)?;
            correct += usize::from((label > 0) == positive);
        }
        let f = &self.graph.facets[m.facet];
        Ok(json!({
            "c": [c_plus, c_minus],
            "located": located,
            "facet": m.facet,
            "layer": f.layer,
            "key": f.key,
            "margin": f.sets.margin(),
            "beta": m.beta,
            "training_accuracy": correct as f64 / self.data.n() as f64,
        })
        .to_string())
    }

    /// Raw training points as JSON `[[x, y, label], ...]`.
    pub fn points(&self) -> String {
        let pts: Vec<_> = (0..self.data.n())
            .map(|i| {
                let (x, positive) = self.data.raw_sample(i);
                json!([x[0], x.get(1).copied().unwrap_or(0.0), if positive { 1 } else { -1 }])
            })
            .collect();
        serde_json::Value::from(pts).to_string()
    }

    /// The whole path as a JSON document.
    #[wasm_bindgen(js_name = exportJson)]
    pub fn export_json(&self) -> Result<String, JsError> {
        io::export_json(&self.graph, Some(&self.data)).map_err(|e| JsError::new(&e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn query_reports_the_facet() {
        let e = explore(dataset::gaussian_classes(4, 4, 2, 1.0, 0.01, 1)).unwrap();
        let v: serde_json::Value = serde_json::from_str(&e.query(1e-4, 2e-4).unwrap()).unwrap();
        assert_eq!(v["facet"], 0);
        assert_eq!(v["beta"].as_array().unwrap().len(), 3);
        let s: serde_json::Value = serde_json::from_str(&e.summary()).unwrap();
        assert_eq!(s["samples"], 8);
        assert!(e.svg(300.0, 300.0, "all", true).unwrap().contains("<polyline"));
        assert_eq!(serde_json::from_str::<serde_json::Value>(&e.points()).unwrap().as_array().unwrap().len(), 8);
    }
}
