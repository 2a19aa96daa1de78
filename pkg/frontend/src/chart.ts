/**
 * Training-curve chart geometry: pure path math for an SVG line chart of
 * loss / precision / recall / F1 against epochs.  One point per epoch.
 */

import type { CurvePoint } from "./types.js";

export interface Series {
  name: string;
  color: string;
  values: number[];
}

export function curveSeries(points: CurvePoint[]): Series[] {
  return [
    { name: "train loss", color: "#888888", values: points.map((p) => p.train_loss) },
    { name: "val loss", color: "#444444", values: points.map((p) => p.val_loss) },
    { name: "precision", color: "#1f77b4", values: points.map((p) => p.precision) },
    { name: "recall", color: "#ff7f0e", values: points.map((p) => p.recall) },
    { name: "f1", color: "#2ca02c", values: points.map((p) => p.f1) },
  ];
}

/** Map values onto an SVG polyline `points` attribute string. */
export function polylinePoints(values: number[], width: number, height: number,
                               yMin: number, yMax: number): string {
  if (values.length === 0) return "";
  const span = yMax - yMin || 1;
  const step = values.length > 1 ? width / (values.length - 1) : 0;
  return values
    .map((v, i) => {
      const x = values.length > 1 ? i * step : width / 2;
      const y = height - ((v - yMin) / span) * height;
      return `${x.toFixed(2)},${y.toFixed(2)}`;
    })
    .join(" ");
}

export function valueBounds(series: Series[]): { min: number; max: number } {
  let min = Infinity;
  let max = -Infinity;
  for (const s of series) {
    for (const v of s.values) {
      if (v < min) min = v;
      if (v > max) max = v;
    }
  }
  if (!isFinite(min)) return { min: 0, max: 1 };
  if (min === max) return { min: min - 0.5, max: max + 0.5 };
  return { min, max };
}
