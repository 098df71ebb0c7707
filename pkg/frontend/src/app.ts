/** Browser entry point: wires the session, pilot input, measure tool and
 * photosphere panner to the DOM. All logic lives in the sibling modules;
 * this file only shuffles values in and out of elements.
 *
 * The bridge address defaults to the page host on port 8080 and can be
 * overridden with ?host= and ?port= query parameters.
 */
import { ConsoleSession, TransportLike } from "./session.js";
import { panelModel } from "./panel.js";
import { MeasureTool } from "./measure.js";
import {
  ESTOP_CODE,
  PILOT_CODES,
  axesFromGamepad,
  axesFromKeys,
  mergeAxes,
} from "./pilot.js";
import {
  PanoView,
  assertEquirect,
  initialView,
  pan,
  viewSlices,
  zoomTo,
} from "./photosphere.js";
import { Vec6, ZERO_AXES } from "./protocol.js";

const qs = new URLSearchParams(window.location.search);
const host = qs.get("host") ?? (window.location.hostname || "127.0.0.1");
const port = Number(qs.get("port") ?? "8080");
const url = `ws://${host}:${port}`;

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

const session = new ConsoleSession(
  url,
  (u) => new WebSocket(u) as unknown as TransportLike,
);
session.connect();

const measure = new MeasureTool(session);

// -- pilot input ----------------------------------------------------------------

const pressed = new Set<string>();
let lastSentAllZero = true;

function pollSticks(): void {
  const pads = navigator.getGamepads ? navigator.getGamepads() : [];
  const pad = pads && pads[0];
  let axes: Vec6 = axesFromKeys(pressed);
  if (pad) axes = mergeAxes(axes, axesFromGamepad(pad.axes));
  const allZero = axes.every((v) => v === 0);
  if (allZero && lastSentAllZero) return;
  session.setJoystick(axes);
  lastSentAllZero = allZero;
}

window.addEventListener("keydown", (e) => {
  if (e.target instanceof HTMLInputElement) return;
  if (!PILOT_CODES.has(e.code)) return;
  e.preventDefault();
  if (e.code === ESTOP_CODE) {
    if (!e.repeat) void session.emergencyStop().catch(() => {});
    return;
  }
  pressed.add(e.code);
  pollSticks();
});
window.addEventListener("keyup", (e) => {
  if (pressed.delete(e.code)) pollSticks();
});
window.addEventListener("blur", () => {
  pressed.clear();
  pollSticks();
});
window.setInterval(pollSticks, 50);

$("btn-estop").addEventListener("click", () => {
  void session.emergencyStop().catch(() => {});
});
for (const mode of ["manual_constant", "manual_incremental"] as const) {
  $(`btn-${mode}`).addEventListener("click", () => {
    void session.setMode(mode).catch(() => {});
  });
}
$("btn-station-keep").addEventListener("click", () => {
  void session.engageStationKeep().catch((err) => showToolError(err));
});
$("btn-reset-alerts").addEventListener("click", () => session.resetAlerts());

// -- telemetry panel --------------------------------------------------------------

const barsEl = $("thrust-bars");
const barFills: HTMLDivElement[] = [];
for (let i = 0; i < 8; i++) {
  const row = document.createElement("div");
  row.className = "bar-row";
  const fill = document.createElement("div");
  fill.className = "bar-fill";
  row.appendChild(fill);
  barsEl.appendChild(row);
  barFills.push(fill);
}

const fmt = (v: number | null, digits = 2, unit = "") =>
  v === null ? "—" : `${v.toFixed(digits)}${unit}`;

function renderPanel(): void {
  const m = panelModel(session);
  const badge = $("conn-badge");
  badge.textContent = session.state;
  badge.className = `badge ${session.state}`;
  $("stale-badge").hidden = !m.stale;
  $("rate").textContent = `${m.rateHz} Hz`;
  $("reconnect").textContent =
    m.reconnectInMs === null ? "" : `retry in ${(m.reconnectInMs / 1000).toFixed(0)}s`;
  $("leak-banner").hidden = !m.leakBanner;
  $("estop-badge").hidden = !m.estop;
  $("alloc-badge").hidden = !m.allocationFault;
  $("mode").textContent = m.mode ?? "—";
  const p = m.pose;
  $("pose").textContent = p
    ? `x ${p.x.toFixed(2)}  y ${p.y.toFixed(2)}  z ${p.z.toFixed(2)}  yaw ${((p.yaw * 180) / Math.PI).toFixed(1)}°`
    : "—";
  $("depth").textContent = fmt(m.depthM, 2, " m");
  $("pressure").textContent = fmt(m.pressureKpa, 1, " kPa");
  $("temp").textContent = fmt(m.waterTempC, 1, " °C");
  $("battery").textContent = fmt(m.batteryV, 1, " V");
  $("manip").textContent =
    m.manipYaw === null ? "—" : `yaw ${fmt(m.manipYaw, 2)}  jaw ${fmt(m.manipJaw, 2)}`;
  m.bars.forEach((bar, i) => {
    const fill = barFills[i];
    if (!fill) return;
    const pct = Math.abs(bar.fraction) * 50;
    fill.style.width = `${pct}%`;
    fill.style.left = bar.fraction < 0 ? `${50 - pct}%` : "50%";
    fill.classList.toggle("reverse", bar.fraction < 0);
    fill.title = `${bar.newtons.toFixed(1)} N`;
  });
  for (const id of ["btn-manual_constant", "btn-manual_incremental", "btn-station-keep"]) {
    ($(id) as HTMLButtonElement).disabled = !m.connected;
  }
  ($("btn-estop") as HTMLButtonElement).disabled = !m.connected;
  requestAnimationFrame(renderPanel);
}
requestAnimationFrame(renderPanel);

// -- camera + measure --------------------------------------------------------------

const cam = $("camera") as HTMLCanvasElement;
const camCtx = cam.getContext("2d")!;
let frameImage: HTMLImageElement | null = null;
let frameFetchInFlight = false;

function showToolError(err: unknown): void {
  $("tool-error").textContent = err instanceof Error ? err.message : String(err ?? "");
}

async function fetchFrame(): Promise<void> {
  if (frameFetchInFlight || session.state !== "open") return;
  frameFetchInFlight = true;
  try {
    const frame = await session.getFrame();
    const img = new Image();
    img.onload = () => {
      cam.width = frame.width;
      cam.height = frame.height;
      frameImage = img;
      drawCamera();
    };
    img.src = `data:image/png;base64,${frame.png_base64}`;
    showToolError("");
  } catch (err) {
    showToolError(err);
  } finally {
    frameFetchInFlight = false;
  }
}
window.setInterval(() => {
  if (($("live-toggle") as HTMLInputElement).checked) void fetchFrame();
}, 200); // 5 Hz cap on PNG fetches
$("btn-frame").addEventListener("click", () => void fetchFrame());

function drawCamera(): void {
  if (!frameImage) return;
  camCtx.drawImage(frameImage, 0, 0);
  camCtx.lineWidth = 2;
  const dot = (pt: readonly number[], color: string) => {
    camCtx.strokeStyle = color;
    camCtx.beginPath();
    camCtx.arc(pt[0] ?? 0, pt[1] ?? 0, 4, 0, Math.PI * 2);
    camCtx.stroke();
  };
  for (const p of measure.calPoints) dot(p, "#ffd24d");
  for (const p of measure.targetPoints) dot(p, "#6ee7ff");
  renderMeasure();
}

function renderMeasure(): void {
  $("measure-prompt").textContent = measure.prompt();
  $("scale-readout").textContent = measure.scaleText();
  $("length-readout").textContent = measure.lengthText();
  const err = measure.lastError;
  if (err) showToolError(err);
  ($("ref-length") as HTMLInputElement).disabled =
    measure.phase !== "need-reference-length";
  ($("btn-calibrate") as HTMLButtonElement).disabled =
    measure.phase !== "need-reference-length";
}

cam.addEventListener("click", (e) => {
  if (!frameImage) return;
  const r = cam.getBoundingClientRect();
  const x = ((e.clientX - r.left) / r.width) * cam.width;
  const y = ((e.clientY - r.top) / r.height) * cam.height;
  const result = measure.click([x, y]);
  drawCamera();
  if (result) void result.then(drawCamera);
});
$("btn-calibrate").addEventListener("click", () => {
  const lengthM = Number(($("ref-length") as HTMLInputElement).value);
  void measure.setReferenceLength(lengthM).then(renderMeasure);
});
$("btn-measure-reset").addEventListener("click", () => {
  measure.reset();
  drawCamera();
  renderMeasure();
});
renderMeasure();

// -- photosphere --------------------------------------------------------------

const pano = $("pano") as HTMLCanvasElement;
const panoCtx = pano.getContext("2d")!;
let panoImage: HTMLImageElement | null = null;
let panoView: PanoView = initialView();

function drawPano(): void {
  const img = panoImage;
  panoCtx.fillStyle = "#10141a";
  panoCtx.fillRect(0, 0, pano.width, pano.height);
  if (!img) return;
  for (const s of viewSlices(panoView, { width: img.width, height: img.height })) {
    panoCtx.drawImage(
      img,
      s.srcX,
      0,
      s.srcWidth,
      img.height,
      s.dstFrac * pano.width,
      0,
      s.dstWidthFrac * pano.width,
      pano.height,
    );
  }
  $("pano-readout").textContent = `lon ${panoView.lonDeg.toFixed(1)}°  zoom ${panoView.zoom.toFixed(2)}×`;
}

($("pano-file") as HTMLInputElement).addEventListener("change", (e) => {
  const file = (e.target as HTMLInputElement).files?.[0];
  if (!file) return;
  const img = new Image();
  img.onload = () => {
    try {
      assertEquirect(img.width, img.height);
    } catch (err) {
      showToolError(err);
      return;
    }
    panoImage = img;
    panoView = initialView();
    drawPano();
  };
  img.src = URL.createObjectURL(file);
});

let dragX: number | null = null;
pano.addEventListener("pointerdown", (e) => {
  dragX = e.clientX;
  pano.setPointerCapture(e.pointerId);
});
pano.addEventListener("pointermove", (e) => {
  if (dragX === null || !panoImage) return;
  panoView = pan(panoView, e.clientX - dragX, pano.getBoundingClientRect().width);
  dragX = e.clientX;
  drawPano();
});
pano.addEventListener("pointerup", () => (dragX = null));
pano.addEventListener("wheel", (e) => {
  if (!panoImage) return;
  e.preventDefault();
  panoView = zoomTo(panoView, panoView.zoom * (e.deltaY < 0 ? 1.25 : 0.8));
  drawPano();
});
drawPano();

// keep the last joystick state from sticking if the page is torn down mid-drive
window.addEventListener("beforeunload", () => {
  session.setJoystick(ZERO_AXES);
  session.close();
});
