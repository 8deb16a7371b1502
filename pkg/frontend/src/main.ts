import { ApiError, EDIT_MODES, EditClient, SEMANTICS_SCOPES, type EditMode, type SemanticsScope } from "./api.js";
import { UNTOUCHED, type Point } from "./paintLayer.js";
import { encodeRgbPng } from "./png.js";
import { EditorSession, SessionError } from "./session.js";

const OVERLAY_ALPHA = 140;
const MAX_VIEW = 512; // CSS pixels; images render scaled but not resampled

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

const client = new EditClient();
const session = new EditorSession(client);

let palette: [number, number, number][] = [];
let brushClass = 0;

const banner = el<HTMLDivElement>("banner");
const statusLine = el<HTMLSpanElement>("status");
const fileInput = el<HTMLInputElement>("file");
const imageCanvas = el<HTMLCanvasElement>("image");
const overlayCanvas = el<HTMLCanvasElement>("overlay");
const paletteBox = el<HTMLDivElement>("palette");
const radiusInput = el<HTMLInputElement>("radius");
const eraserInput = el<HTMLInputElement>("eraser");
const modeSelect = el<HTMLSelectElement>("mode");
const scopeSelect = el<HTMLSelectElement>("scope");
const submitBtn = el<HTMLButtonElement>("submit");
const undoBtn = el<HTMLButtonElement>("undo");
const redoBtn = el<HTMLButtonElement>("redo");

function showError(message: string, retry?: () => void): void {
  banner.textContent = message;
  banner.hidden = false;
  if (retry) {
    const btn = document.createElement("button");
    btn.textContent = "retry";
    btn.onclick = () => {
      banner.hidden = true;
      retry();
    };
    banner.append(" ", btn);
  }
}

function clearError(): void {
  banner.hidden = true;
  banner.textContent = "";
}

function refreshControls(): void {
  submitBtn.disabled = !session.canSubmit();
  undoBtn.disabled = !session.canUndo();
  redoBtn.disabled = !session.canRedo();
}

function brush() {
  return {
    classId: brushClass,
    radius: Math.max(1, Number(radiusInput.value) || 1),
    eraser: eraserInput.checked,
  };
}

async function drawWorkingImage(): Promise<void> {
  const blob = new Blob([session.imagePng as BlobPart], { type: "image/png" });
  const bitmap = await createImageBitmap(blob);
  imageCanvas.width = bitmap.width;
  imageCanvas.height = bitmap.height;
  overlayCanvas.width = bitmap.width;
  overlayCanvas.height = bitmap.height;
  const scale = Math.max(1, Math.floor(MAX_VIEW / bitmap.width));
  const cssW = `${bitmap.width * scale}px`;
  const cssH = `${bitmap.height * scale}px`;
  imageCanvas.style.width = cssW;
  imageCanvas.style.height = cssH;
  overlayCanvas.style.width = cssW;
  overlayCanvas.style.height = cssH;
  imageCanvas.getContext("2d")!.drawImage(bitmap, 0, 0);
  renderOverlay();
}

function renderOverlay(): void {
  const ctx = overlayCanvas.getContext("2d")!;
  ctx.clearRect(0, 0, overlayCanvas.width, overlayCanvas.height);
  if (!session.loaded) return;
  const layer = session.paintLayer;
  const img = ctx.createImageData(layer.width, layer.height);
  for (let i = 0; i < layer.data.length; i++) {
    const cls = layer.data[i]!;
    if (cls === UNTOUCHED) continue;
    const color = palette[cls] ?? [255, 0, 255];
    img.data[i * 4] = color[0];
    img.data[i * 4 + 1] = color[1];
    img.data[i * 4 + 2] = color[2];
    img.data[i * 4 + 3] = OVERLAY_ALPHA;
  }
  ctx.putImageData(img, 0, 0);
}

function buildPalette(names: string[], colors: [number, number, number][]): void {
  palette = colors;
  paletteBox.replaceChildren();
  names.forEach((name, i) => {
    const btn = document.createElement("button");
    btn.textContent = `${i} ${name}`;
    btn.style.borderLeft = `12px solid rgb(${colors[i]!.join(",")})`;
    btn.className = i === brushClass ? "cls selected" : "cls";
    btn.onclick = () => {
      brushClass = i;
      for (const other of paletteBox.children) other.className = "cls";
      btn.className = "cls selected";
      eraserInput.checked = false;
    };
    paletteBox.append(btn);
  });
}

async function loadFile(file: File): Promise<void> {
  clearError();
  let bitmap: ImageBitmap;
  try {
    bitmap = await createImageBitmap(file);
  } catch {
    showError(`could not decode ${file.name} as an image`);
    return;
  }
  // Re-encode through a canvas so the upload format no longer matters:
  // the server only accepts RGB PNG.
  const work = document.createElement("canvas");
  work.width = bitmap.width;
  work.height = bitmap.height;
  const ctx = work.getContext("2d")!;
  ctx.drawImage(bitmap, 0, 0);
  const rgba = ctx.getImageData(0, 0, bitmap.width, bitmap.height).data;
  const rgb = new Uint8Array(bitmap.width * bitmap.height * 3);
  for (let p = 0; p < bitmap.width * bitmap.height; p++) {
    rgb[p * 3] = rgba[p * 4]!;
    rgb[p * 3 + 1] = rgba[p * 4 + 1]!;
    rgb[p * 3 + 2] = rgba[p * 4 + 2]!;
  }
  try {
    session.load(encodeRgbPng(bitmap.width, bitmap.height, rgb));
  } catch (err) {
    showError(err instanceof Error ? err.message : String(err));
    return;
  }
  await drawWorkingImage();
  refreshControls();
  statusLine.textContent = `${bitmap.width}×${bitmap.height}`;
}

// --- pointer handling: collect the full drag path, commit one stroke on release ---

let dragPath: Point[] | null = null;

function canvasPoint(ev: PointerEvent): Point {
  const rect = overlayCanvas.getBoundingClientRect();
  return {
    x: ((ev.clientX - rect.left) / rect.width) * overlayCanvas.width,
    y: ((ev.clientY - rect.top) / rect.height) * overlayCanvas.height,
  };
}

function previewSegment(a: Point, b: Point): void {
  const ctx = overlayCanvas.getContext("2d")!;
  const color = eraserInput.checked ? [255, 255, 255] : (palette[brushClass] ?? [255, 0, 255]);
  ctx.strokeStyle = `rgba(${color.join(",")},0.55)`;
  ctx.lineWidth = brush().radius * 2;
  ctx.lineCap = "round";
  ctx.beginPath();
  ctx.moveTo(a.x, a.y);
  ctx.lineTo(b.x, b.y);
  ctx.stroke();
}

overlayCanvas.addEventListener("pointerdown", (ev) => {
  if (!session.loaded || session.isPending) return;
  overlayCanvas.setPointerCapture(ev.pointerId);
  const p = canvasPoint(ev);
  dragPath = [p];
  previewSegment(p, p);
});

overlayCanvas.addEventListener("pointermove", (ev) => {
  if (!dragPath) return;
  const p = canvasPoint(ev);
  previewSegment(dragPath[dragPath.length - 1]!, p);
  dragPath.push(p);
});

overlayCanvas.addEventListener("pointerup", (ev) => {
  if (!dragPath) return;
  const path = dragPath;
  dragPath = null;
  overlayCanvas.releasePointerCapture(ev.pointerId);
  try {
    session.stroke(path, brush());
  } catch (err) {
    showError(err instanceof Error ? err.message : String(err));
  }
  renderOverlay();
  refreshControls();
});

submitBtn.addEventListener("click", async () => {
  clearError();
  const mode = modeSelect.value as EditMode;
  const scope = scopeSelect.value as SemanticsScope;
  refreshControls();
  submitBtn.disabled = true;
  try {
    const res = await session.submit(mode, scope);
    await drawWorkingImage();
    statusLine.textContent = `${res.model_version} · ${res.latency_ms.toFixed(1)} ms · history ${session.editDepth}`;
  } catch (err) {
    if (err instanceof ApiError) showError(`edit failed (${err.status || "network"}): ${err.detail}`);
    else if (err instanceof SessionError) showError(err.message);
    else throw err;
  } finally {
    refreshControls();
  }
});

undoBtn.addEventListener("click", async () => {
  session.undo();
  await drawWorkingImage();
  refreshControls();
});

redoBtn.addEventListener("click", async () => {
  session.redo();
  await drawWorkingImage();
  refreshControls();
});

fileInput.addEventListener("change", () => {
  const file = fileInput.files?.[0];
  if (file) void loadFile(file);
});

async function boot(): Promise<void> {
  for (const mode of EDIT_MODES) modeSelect.add(new Option(mode, mode));
  for (const scope of SEMANTICS_SCOPES) scopeSelect.add(new Option(scope, scope));
  scopeSelect.value = "bbox";
  try {
    const health = await client.health();
    statusLine.textContent = `server ok · ${health.model_version}`;
    const classes = await client.classes();
    session.setNumClasses(classes.num_classes);
    buildPalette(classes.names, classes.palette);
  } catch (err) {
    const detail = err instanceof ApiError ? err.detail : String(err);
    showError(`server not reachable: ${detail}`, () => void boot());
  }
  refreshControls();
}

void boot();
