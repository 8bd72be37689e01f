/**
 * Parsers for the workbench CSV exports.
 *
 * Metric values are kept as the exact strings the server sent; the UI
 * renders them verbatim so every displayed number traces back to a
 * response byte-for-byte.
 */

import type { DistanceRow, LearningCurveRow } from './types.js';

export function parseLearningCurveCsv(text: string): LearningCurveRow[] {
  const lines = text.trim().split(/\r?\n/);
  if (lines.length === 0 || lines[0] !== 'iteration,view,accuracy,precision,recall,f1') {
    throw new Error(`unexpected learning-curve header: ${lines[0] ?? '(empty)'}`);
  }
  return lines.slice(1).filter(Boolean).map((line) => {
    const [iteration, view, accuracy, precision, recall, f1] = line.split(',');
    return {
      iteration: Number(iteration),
      view,
      accuracy,
      precision,
      recall,
      f1,
    };
  });
}

export function parseDistanceRows(rows: Array<Record<string, string>>): DistanceRow[] {
  return rows.map((row) => ({
    post_id: row.post_id,
    set: row.set as DistanceRow['set'],
    distance: Number(row.distance),
    quadrant: row.quadrant as DistanceRow['quadrant'],
  }));
}
