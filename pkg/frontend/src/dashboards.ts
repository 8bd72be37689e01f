/**
 * Dashboards: learning curves per training view and the distance
 * distributions around the hyperplane.
 *
 * Every rendered number is lifted verbatim from the CSV/JSON endpoints;
 * the client does no metric computation, only drawing. Metric strings
 * from the CSV are displayed exactly as received.
 */

import { ApiClient, ApiError } from './api.js';
import { lineChart, mirroredHistogram, type HistogramBin, type Series } from './charts.js';
import { parseDistanceRows, parseLearningCurveCsv } from './csv.js';
import type { DistanceRow, DistancesResponse, LearningCurveRow } from './types.js';

const VIEW_COLORS: Record<string, string> = {};
const PALETTE = ['#b04030', '#3060a8', '#3c8044', '#8a5fb0', '#a07820'];

const QUADRANT_COLORS: Record<string, string> = {
  TP: '#3c8044',
  FP: '#b04030',
  TN: '#4878a8',
  FN: '#a07820',
  none: '#888888',
};

function colorFor(view: string): string {
  if (!(view in VIEW_COLORS)) {
    VIEW_COLORS[view] = PALETTE[Object.keys(VIEW_COLORS).length % PALETTE.length];
  }
  return VIEW_COLORS[view];
}

export async function renderDashboards(api: ApiClient, root: HTMLElement): Promise<void> {
  root.textContent = '';
  let curveRows: LearningCurveRow[] = [];
  try {
    curveRows = parseLearningCurveCsv(await api.learningCurveCsv());
  } catch (failure) {
    if (!(failure instanceof ApiError)) {
      throw failure;
    }
  }
  if (curveRows.length === 0) {
    const placeholder = document.createElement('p');
    placeholder.className = 'empty-state';
    placeholder.textContent = 'no completed iterations yet: advance the loop to populate dashboards';
    root.appendChild(placeholder);
    return;
  }
  root.appendChild(renderLearningCurves(curveRows));

  let distances: DistancesResponse | null = null;
  try {
    distances = await api.distances();
  } catch (failure) {
    if (!(failure instanceof ApiError && failure.status === 404)) {
      throw failure;
    }
  }
  if (distances) {
    root.appendChild(renderDistances(distances));
  }
}

export function renderLearningCurves(rows: LearningCurveRow[]): HTMLElement {
  const section = document.createElement('section');
  section.className = 'learning-curves';
  const heading = document.createElement('h2');
  heading.textContent = 'learning curves';
  section.appendChild(heading);

  const views = [...new Set(rows.map((r) => r.view))];
  const series: Series[] = [];
  for (const view of views) {
    const viewRows = rows.filter((r) => r.view === view).sort((a, b) => a.iteration - b.iteration);
    series.push({
      name: `${view} accuracy`,
      color: colorFor(view),
      points: viewRows.map((r) => ({ x: r.iteration, y: Number(r.accuracy) })),
    });
    series.push({
      name: `${view} f1`,
      color: colorFor(view),
      dashed: true,
      points: viewRows.map((r) => ({ x: r.iteration, y: Number(r.f1) })),
    });
  }
  section.appendChild(lineChart(series, { title: 'accuracy (solid) and F1 (dashed) per view' }));

  // the numbers themselves, exactly as the server sent them
  const table = document.createElement('table');
  table.className = 'curve-table';
  const head = document.createElement('tr');
  for (const column of ['iteration', 'view', 'accuracy', 'precision', 'recall', 'f1']) {
    const cell = document.createElement('th');
    cell.textContent = column;
    head.appendChild(cell);
  }
  table.appendChild(head);
  for (const row of rows) {
    const tr = document.createElement('tr');
    const values = [String(row.iteration), row.view, row.accuracy, row.precision, row.recall, row.f1];
    for (const value of values) {
      const cell = document.createElement('td');
      cell.textContent = value;
      tr.appendChild(cell);
    }
    table.appendChild(tr);
  }
  section.appendChild(table);
  return section;
}

export function renderDistances(distances: DistancesResponse): HTMLElement {
  const section = document.createElement('section');
  section.className = 'distance-distribution';
  const heading = document.createElement('h2');
  heading.textContent =
    `distances to the ${distances.view} hyperplane (iteration ${distances.iteration}, ` +
    `${distances.summary.quadrant_mode})`;
  section.appendChild(heading);

  const rows = parseDistanceRows(distances.rows);
  const summary = distances.summary;

  const labeledBins = binsWithQuadrantSegments(
    summary.bins.labeled ?? [],
    rows.filter((r) => r.set === 'labeled'),
    summary.bin_width,
  );
  const unlabeledBins: HistogramBin[] = (summary.bins.unlabeled ?? []).map(([lo, hi, count]) => ({
    lo,
    hi,
    count,
  }));

  section.appendChild(
    mirroredHistogram(labeledBins, unlabeledBins, {
      leftLabel: 'labeled (TP/FP/TN/FN)',
      rightLabel: 'unlabeled',
      posCount: summary.pos_count,
      negCount: summary.neg_count,
      independentSideScale: true,
      caption:
        'bars are scaled per side: the negative side holds many times more posts than the positive side',
    }),
  );

  const quadrants = document.createElement('div');
  quadrants.className = 'quadrant-legend';
  for (const name of ['TP', 'FP', 'TN', 'FN']) {
    const chip = document.createElement('span');
    chip.className = `quadrant quadrant-${name}`;
    chip.style.borderColor = QUADRANT_COLORS[name];
    chip.textContent = `${name}: ${summary.quadrants[name] ?? 0}`;
    quadrants.appendChild(chip);
  }
  section.appendChild(quadrants);
  return section;
}

/**
 * Split each server-declared labeled bin into quadrant segments by
 * grouping the server's per-post rows into that same bin grid.
 */
function binsWithQuadrantSegments(
  serverBins: Array<[number, number, number]>,
  labeledRows: DistanceRow[],
  binWidth: number,
): HistogramBin[] {
  return serverBins.map(([lo, hi, count]) => {
    const members = labeledRows.filter(
      (row) => Math.floor(row.distance / binWidth) * binWidth >= lo - 1e-12 &&
        Math.floor(row.distance / binWidth) * binWidth < lo + binWidth - 1e-12,
    );
    const byQuadrant = new Map<string, number>();
    for (const row of members) {
      byQuadrant.set(row.quadrant, (byQuadrant.get(row.quadrant) ?? 0) + 1);
    }
    return {
      lo,
      hi,
      count,
      segments: [...byQuadrant.entries()].map(([name, n]) => ({
        name,
        count: n,
        color: QUADRANT_COLORS[name] ?? '#888888',
      })),
    };
  });
}
