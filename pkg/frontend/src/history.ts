export const MAX_DEPTH = 20;

/**
 * Snapshot-based undo/redo. `record` pushes the state that existed before
 * a change; once more than `maxDepth` snapshots accumulate the oldest is
 * dropped, so memory stays bounded during long sessions.
 */
export class History<T> {
  private past: T[] = [];
  private future: T[] = [];

  constructor(readonly maxDepth: number = MAX_DEPTH) {
    if (maxDepth < 1) throw new Error("history: depth must be >= 1");
  }

  get depth(): number {
    return this.past.length;
  }

  canUndo(): boolean {
    return this.past.length > 0;
  }

  canRedo(): boolean {
    return this.future.length > 0;
  }

  record(state: T): void {
    this.past.push(state);
    if (this.past.length > this.maxDepth) this.past.shift();
    this.future = [];
  }

  /** Returns the restored state, handing `current` to the redo stack. */
  undo(current: T): T | undefined {
    const prev = this.past.pop();
    if (prev !== undefined) this.future.push(current);
    return prev;
  }

  redo(current: T): T | undefined {
    const next = this.future.pop();
    if (next !== undefined) this.past.push(current);
    return next;
  }

  /** Drop redo states without touching the past (a new change branched off). */
  discardFuture(): void {
    this.future = [];
  }

  clear(): void {
    this.past = [];
    this.future = [];
  }
}
