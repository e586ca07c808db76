import init, { Explorer } from "./pkg/acpath_web.js";

const W = 640, H = 640;
const $ = (id) => document.getElementById(id);
let ex = null;

function status(msg, error = false) {
  $("status").textContent = msg;
  $("status").className = error ? "error" : "";
}

function draw() {
  if (!ex) return;
  const wp = parseFloat($("wplus").value), wm = parseFloat($("wminus").value);
  if (wp > 0 && wm > 0) ex.setWindow(wp, wm);
  try {
    $("canvas").innerHTML = ex.svg(W, H, $("events").value, $("means").checked);
  } catch (e) {
    status(String(e), true);
  }
  $("marker").style.display = "none";
}

function trace() {
  status("tracing...");
  // let the status line paint before the synchronous run
  setTimeout(() => {
    const t0 = performance.now();
    try {
      if (ex) ex.free();
      ex = new Explorer(+$("nplus").value, +$("nminus").value, +$("shift").value, BigInt($("seed").value));
    } catch (e) {
      ex = null;
      status(String(e), true);
      return;
    }
    const s = JSON.parse(ex.summary());
    status(`${s.facets} facets, ${s.edges} edges, ${s.vertices} vertices in ${s.layers} layers, ` +
           `${s.unexplored} unexplored descriptors (${(performance.now() - t0).toFixed(0)} ms)`);
    $("wplus").value = ex.windowPlus().toPrecision(4);
    $("wminus").value = ex.windowMinus().toPrecision(4);
    $("query").textContent = "";
    draw();
  }, 10);
}

function query(ev) {
  if (!ex) return;
  const box = $("canvas").getBoundingClientRect();
  const x = ev.clientX - box.left, y = ev.clientY - box.top;
  const cp = (x / W) * ex.windowPlus(), cm = (1 - y / H) * ex.windowMinus();
  if (cp < 0 || cm < 0) return;
  const m = $("marker");
  m.style.left = `${x}px`;
  m.style.top = `${y}px`;
  m.style.display = "block";
  try {
    const r = JSON.parse(ex.query(cp, cm));
    if (r.beta) r.beta = r.beta.map((b) => +b.toPrecision(6));
    $("query").textContent = JSON.stringify(r, null, 1);
  } catch (e) {
    $("query").textContent = String(e);
  }
}

await init();
$("trace").addEventListener("click", trace);
$("redraw").addEventListener("click", draw);
$("plot").addEventListener("click", query);
trace();
