import type { EditMode, EditRequest, EditResponse, SemanticsScope } from "./api.js";
import { base64ToBytes, bytesToBase64 } from "./base64.js";
import { History } from "./history.js";
import { PaintLayer, type BrushState, type Point } from "./paintLayer.js";
import { readPngSize } from "./png.js";

// Server caps each base64 field at 4 MiB; refuse the request client-side.
export const MAX_FIELD_BYTES = 4 * 1024 * 1024;

export class SessionError extends Error {}

export interface EditApi {
  edit(req: EditRequest): Promise<EditResponse>;
}

interface WorkingState {
  png: Uint8Array; // RGB PNG bytes of the current substrate
  layer: PaintLayer;
}

/**
 * Editing state machine: load an image, paint class labels over it, submit,
 * and keep editing the result in place. Two undo scopes cooperate here —
 * unsubmitted strokes rewind one stroke at a time, and each successful
 * submit pushes the whole previous working state (depth-capped, see
 * History) so earlier substrates stay reachable.
 */
export class EditorSession {
  private png: Uint8Array | null = null;
  private layer: PaintLayer | null = null;
  private pending = false;
  private numClasses: number | null = null;

  private readonly strokes = new History<PaintLayer>();
  private readonly edits = new History<WorkingState>();

  constructor(private readonly api: EditApi) {}

  /** Palette size from /classes; strokes outside [0, n) are rejected. */
  setNumClasses(n: number): void {
    if (n < 1) throw new SessionError("num_classes must be >= 1");
    this.numClasses = n;
  }

  get loaded(): boolean {
    return this.png !== null;
  }

  get isPending(): boolean {
    return this.pending;
  }

  get width(): number {
    return this.requireLayer().width;
  }

  get height(): number {
    return this.requireLayer().height;
  }

  get editDepth(): number {
    return this.edits.depth;
  }

  get imagePng(): Uint8Array {
    if (this.png === null) throw new SessionError("no image loaded");
    return this.png;
  }

  get paintLayer(): PaintLayer {
    return this.requireLayer();
  }

  private requireLayer(): PaintLayer {
    if (this.layer === null) throw new SessionError("no image loaded");
    return this.layer;
  }

  /**
   * Accepts raw PNG bytes (already RGB — callers re-encode uploads through
   * a canvas first). Mirrors the server's shape rule so a bad image fails
   * here instead of as a 400 later.
   */
  load(pngBytes: Uint8Array): void {
    const { width, height } = readPngSize(pngBytes);
    if (width % 4 !== 0 || height % 4 !== 0) {
      throw new SessionError("image: height and width must be divisible by 4");
    }
    this.png = pngBytes;
    this.layer = new PaintLayer(width, height);
    this.strokes.clear();
    this.edits.clear();
  }

  stroke(path: Point[], brush: BrushState): void {
    const layer = this.requireLayer();
    if (this.pending) throw new SessionError("edit in flight");
    if (!brush.eraser) {
      if (this.numClasses !== null && (brush.classId < 0 || brush.classId >= this.numClasses)) {
        throw new SessionError(`painted_labels: class index ${brush.classId} out of range`);
      }
    }
    this.strokes.record(layer.clone());
    this.edits.discardFuture();
    layer.stroke(path, brush);
  }

  canSubmit(): boolean {
    return this.loaded && !this.pending && !this.requireLayer().isEmpty();
  }

  canUndo(): boolean {
    return !this.pending && (this.strokes.canUndo() || this.edits.canUndo());
  }

  canRedo(): boolean {
    return !this.pending && (this.strokes.canRedo() || this.edits.canRedo());
  }

  /** Unsubmitted strokes rewind first, then whole edits. */
  undo(): void {
    if (this.pending) throw new SessionError("edit in flight");
    if (this.strokes.canUndo()) {
      this.layer = this.strokes.undo(this.requireLayer())!;
      return;
    }
    const prev = this.edits.undo({ png: this.imagePng, layer: this.requireLayer() });
    if (prev === undefined) return;
    this.png = prev.png;
    this.layer = prev.layer;
    this.strokes.clear();
  }

  redo(): void {
    if (this.pending) throw new SessionError("edit in flight");
    if (this.strokes.canRedo()) {
      this.layer = this.strokes.redo(this.requireLayer())!;
      return;
    }
    const next = this.edits.redo({ png: this.imagePng, layer: this.requireLayer() });
    if (next === undefined) return;
    this.png = next.png;
    this.layer = next.layer;
    this.strokes.clear();
  }

  buildRequest(mode: EditMode, scope: SemanticsScope): EditRequest {
    const image = bytesToBase64(this.imagePng);
    const painted = bytesToBase64(this.requireLayer().toPNG());
    if (image.length > MAX_FIELD_BYTES) throw new SessionError("image: too large for one request");
    if (painted.length > MAX_FIELD_BYTES) throw new SessionError("painted_labels: too large for one request");
    return { image, painted_labels: painted, mode, semantics_scope: scope };
  }

  /**
   * POSTs the edit; on success the result becomes the working image and the
   * previous state lands on the edit history. At most one request is in
   * flight — callers should disable submit while `isPending`.
   */
  async submit(mode: EditMode, scope: SemanticsScope): Promise<EditResponse> {
    if (!this.loaded) throw new SessionError("no image loaded");
    if (this.pending) throw new SessionError("edit already in flight");
    if (this.requireLayer().isEmpty()) throw new SessionError("painted_labels: painted region is empty");
    const req = this.buildRequest(mode, scope);
    this.pending = true;
    try {
      const res = await this.api.edit(req);
      this.edits.record({ png: this.imagePng, layer: this.requireLayer() });
      this.png = base64ToBytes(res.image);
      this.layer = new PaintLayer(this.width, this.height);
      this.strokes.clear();
      return res;
    } finally {
      this.pending = false;
    }
  }
}
