import { encodeGrayPng } from "./png.js";

/** Sentinel for pixels the user has not painted. Never a valid class id. */
export const UNTOUCHED = 255;

export interface BrushState {
  classId: number;
  radius: number;
  eraser: boolean;
}

export interface Point {
  x: number;
  y: number;
}

/**
 * Per-pixel class indices over the working image, 255 where untouched.
 * This is exactly the payload the server expects as painted_labels.
 */
export class PaintLayer {
  readonly width: number;
  readonly height: number;
  readonly data: Uint8Array;

  constructor(width: number, height: number, data?: Uint8Array) {
    if (width < 1 || height < 1) throw new Error("paint layer: empty size");
    if (data !== undefined && data.length !== width * height) {
      throw new Error("paint layer: data does not match size");
    }
    this.width = width;
    this.height = height;
    this.data = data ?? new Uint8Array(width * height).fill(UNTOUCHED);
  }

  clone(): PaintLayer {
    return new PaintLayer(this.width, this.height, this.data.slice());
  }

  isEmpty(): boolean {
    return this.data.every((v) => v === UNTOUCHED);
  }

  paintedCount(): number {
    let n = 0;
    for (const v of this.data) if (v !== UNTOUCHED) n++;
    return n;
  }

  at(x: number, y: number): number {
    return this.data[y * this.width + x]!;
  }

  /** Stamp value on every pixel with dx^2+dy^2 <= radius^2 around (cx, cy). */
  stampDisc(cx: number, cy: number, radius: number, value: number): void {
    const r = Math.max(1, Math.floor(radius));
    const x0 = Math.max(0, Math.ceil(cx - r));
    const x1 = Math.min(this.width - 1, Math.floor(cx + r));
    const y0 = Math.max(0, Math.ceil(cy - r));
    const y1 = Math.min(this.height - 1, Math.floor(cy + r));
    for (let y = y0; y <= y1; y++) {
      for (let x = x0; x <= x1; x++) {
        const dx = x - cx;
        const dy = y - cy;
        if (dx * dx + dy * dy <= r * r) this.data[y * this.width + x] = value;
      }
    }
  }

  /** Apply a brush along a pointer path: discs stamped densely between samples. */
  stroke(path: Point[], brush: BrushState): void {
    const value = brush.eraser ? UNTOUCHED : brush.classId;
    if (path.length === 0) return;
    let prev = path[0]!;
    this.stampDisc(prev.x, prev.y, brush.radius, value);
    for (let i = 1; i < path.length; i++) {
      const cur = path[i]!;
      const steps = Math.max(1, Math.ceil(Math.hypot(cur.x - prev.x, cur.y - prev.y)));
      for (let s = 1; s <= steps; s++) {
        const t = s / steps;
        this.stampDisc(prev.x + (cur.x - prev.x) * t, prev.y + (cur.y - prev.y) * t, brush.radius, value);
      }
      prev = cur;
    }
  }

  toPNG(): Uint8Array {
    return encodeGrayPng(this.width, this.height, this.data);
  }
}
