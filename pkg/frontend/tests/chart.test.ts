import { describe, expect, it } from "vitest";

import { curveSeries, polylinePoints, valueBounds } from "../src/chart.js";
import type { CurvePoint } from "../src/types.js";

function fakeCurve(epochs: number): CurvePoint[] {
  return Array.from({ length: epochs }, (_, epoch) => ({
    epoch,
    train_loss: 1 / (epoch + 1),
    val_loss: 1.2 / (epoch + 1),
    precision: Math.min(1, 0.5 + epoch / epochs),
    recall: Math.min(1, 0.4 + epoch / epochs),
    f1: Math.min(1, 0.45 + epoch / epochs),
  }));
}

describe("curveSeries", () => {
  it("exposes the five charted quantities", () => {
    const series = curveSeries(fakeCurve(3));
    expect(series.map((s) => s.name)).toEqual(
      ["train loss", "val loss", "precision", "recall", "f1"]);
  });

  it("a 400-epoch run renders 400 points per series", () => {
    const series = curveSeries(fakeCurve(400));
    for (const s of series) {
      expect(s.values.length).toBe(400);
      const path = polylinePoints(s.values, 640, 240, 0, 1.2);
      expect(path.split(" ").length).toBe(400);
    }
  });
});

describe("polylinePoints", () => {
  it("maps values onto the viewport", () => {
    const path = polylinePoints([0, 1], 100, 50, 0, 1);
    expect(path).toBe("0.00,50.00 100.00,0.00");
  });

  it("handles an empty series", () => {
    expect(polylinePoints([], 100, 50, 0, 1)).toBe("");
  });
});

describe("valueBounds", () => {
  it("spans all series", () => {
    const bounds = valueBounds([
      { name: "a", color: "#000", values: [0.2, 0.8] },
      { name: "b", color: "#000", values: [1.5] },
    ]);
    expect(bounds).toEqual({ min: 0.2, max: 1.5 });
  });

  it("degenerate constant series still get a span", () => {
    const bounds = valueBounds([{ name: "a", color: "#000", values: [1, 1] }]);
    expect(bounds.max).toBeGreaterThan(bounds.min);
  });
});
