import { describe, expect, it } from "vitest";
import { History, MAX_DEPTH } from "../src/history.js";

describe("History", () => {
  it("undo returns recorded states newest-first", () => {
    const h = new History<number>();
    h.record(1);
    h.record(2);
    expect(h.depth).toBe(2);
    expect(h.undo(3)).toBe(2);
    expect(h.undo(2)).toBe(1);
    expect(h.undo(1)).toBeUndefined();
  });

  it("redo walks forward again", () => {
    const h = new History<string>();
    h.record("a");
    h.record("b");
    const prev = h.undo("c"); // back to "b", "c" parked for redo
    expect(prev).toBe("b");
    expect(h.canRedo()).toBe(true);
    expect(h.redo("b")).toBe("c");
    expect(h.depth).toBe(2);
    expect(h.canRedo()).toBe(false);
  });

  it("recording clears the redo branch", () => {
    const h = new History<number>();
    h.record(1);
    h.undo(2);
    h.record(9);
    expect(h.canRedo()).toBe(false);
  });

  it("discardFuture drops redo states only", () => {
    const h = new History<number>();
    h.record(1);
    h.record(2);
    h.undo(3);
    expect(h.canRedo()).toBe(true);
    h.discardFuture();
    expect(h.canRedo()).toBe(false);
    expect(h.depth).toBe(1);
  });

  it("depth is capped at 20, dropping the oldest snapshots", () => {
    const h = new History<number>();
    for (let i = 0; i < 25; i++) h.record(i);
    expect(h.depth).toBe(MAX_DEPTH);
    expect(h.depth).toBe(20);
    // the 5 oldest (0..4) are gone; undo surfaces 24, 23, ... 5
    for (let expected = 24; expected >= 5; expected--) {
      expect(h.undo(-1)).toBe(expected);
    }
    expect(h.undo(-1)).toBeUndefined();
  });

  it("rejects a non-positive depth", () => {
    expect(() => new History(0)).toThrow(/depth/);
  });
});
