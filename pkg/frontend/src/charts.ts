/**
 * Dependency-free SVG renderers: a line chart for learning curves and a
 * mirrored histogram (beanplot-style) for hyperplane distances.
 *
 * These are purely presentational; the numbers they draw arrive
 * pre-computed from the server.
 */

const SVG_NS = 'http://www.w3.org/2000/svg';

export interface Series {
  name: string;
  color: string;
  dashed?: boolean;
  points: Array<{ x: number; y: number }>;
}

function svgElement<K extends keyof SVGElementTagNameMap>(
  tag: K,
  attrs: Record<string, string | number>,
): SVGElementTagNameMap[K] {
  const element = document.createElementNS(SVG_NS, tag);
  for (const [key, value] of Object.entries(attrs)) {
    element.setAttribute(key, String(value));
  }
  return element;
}

export function lineChart(
  series: Series[],
  options: { width?: number; height?: number; yMin?: number; yMax?: number; title?: string } = {},
): SVGSVGElement {
  const width = options.width ?? 560;
  const height = options.height ?? 280;
  const pad = 36;
  const yMin = options.yMin ?? 0;
  const yMax = options.yMax ?? 1;
  const xs = series.flatMap((s) => s.points.map((p) => p.x));
  const xMin = xs.length ? Math.min(...xs) : 0;
  const xMax = xs.length ? Math.max(...xs) : 1;
  const spanX = xMax - xMin || 1;

  const svg = svgElement('svg', {
    viewBox: `0 0 ${width} ${height}`,
    width,
    height,
    role: 'img',
  });
  svg.classList.add('line-chart');

  const toX = (x: number) => pad + ((x - xMin) / spanX) * (width - 2 * pad);
  const toY = (y: number) => height - pad - ((y - yMin) / (yMax - yMin)) * (height - 2 * pad);

  svg.appendChild(svgElement('line', {
    x1: pad, y1: height - pad, x2: width - pad, y2: height - pad, stroke: '#888',
  }));
  svg.appendChild(svgElement('line', {
    x1: pad, y1: pad, x2: pad, y2: height - pad, stroke: '#888',
  }));
  for (const tick of [yMin, (yMin + yMax) / 2, yMax]) {
    const label = svgElement('text', {
      x: 4, y: toY(tick) + 4, 'font-size': 10, fill: '#555',
    });
    label.textContent = tick.toFixed(1);
    svg.appendChild(label);
  }
  if (options.title) {
    const title = svgElement('text', { x: width / 2, y: 14, 'text-anchor': 'middle', 'font-size': 12 });
    title.textContent = options.title;
    svg.appendChild(title);
  }

  for (const s of series) {
    if (!s.points.length) {
      continue;
    }
    const path = s.points
      .map((p, i) => `${i === 0 ? 'M' : 'L'}${toX(p.x).toFixed(1)},${toY(p.y).toFixed(1)}`)
      .join(' ');
    const line = svgElement('path', {
      d: path,
      fill: 'none',
      stroke: s.color,
      'stroke-width': 1.6,
    });
    if (s.dashed) {
      line.setAttribute('stroke-dasharray', '5,3');
    }
    line.classList.add('series');
    line.dataset.series = s.name;
    svg.appendChild(line);
    for (const p of s.points) {
      svg.appendChild(svgElement('circle', {
        cx: toX(p.x), cy: toY(p.y), r: 2.4, fill: s.color,
      }));
    }
  }
  return svg;
}

export interface HistogramBin {
  lo: number;
  hi: number;
  count: number;
  /** stacked segments, e.g. quadrant counts; must sum to count when given */
  segments?: Array<{ name: string; count: number; color: string }>;
}

export interface MirroredHistogramOptions {
  width?: number;
  barHeight?: number;
  leftLabel: string;
  rightLabel: string;
  posCount: number;
  negCount: number;
  /** when true, each horizontal side is scaled by its own maximum */
  independentSideScale?: boolean;
  caption?: string;
}

/**
 * Distance on the vertical axis (positive side up), one bar row per bin:
 * the left half mirrors `left` bins, the right half `right` bins.
 */
export function mirroredHistogram(
  left: HistogramBin[],
  right: HistogramBin[],
  options: MirroredHistogramOptions,
): HTMLElement {
  const width = options.width ?? 640;
  const barHeight = options.barHeight ?? 10;
  const mid = width / 2;

  const los = [...left, ...right].map((b) => b.lo);
  const his = [...left, ...right].map((b) => b.hi);
  const binWidth = his.length ? his[0] - los[0] : 1;
  const lo = los.length ? Math.min(...los) : -1;
  const hi = his.length ? Math.max(...his) : 1;
  const rows = Math.max(1, Math.round((hi - lo) / binWidth));
  const height = rows * barHeight + 40;

  const leftMax = Math.max(1, ...left.map((b) => b.count));
  const rightMax = Math.max(1, ...right.map((b) => b.count));
  const sharedMax = Math.max(leftMax, rightMax);

  const svg = svgElement('svg', { viewBox: `0 0 ${width} ${height}`, width, height });
  svg.classList.add('mirrored-histogram');

  const rowY = (binLo: number) => 20 + (rows - 1 - Math.round((binLo - lo) / binWidth)) * barHeight;

  const drawSide = (bins: HistogramBin[], direction: -1 | 1, max: number) => {
    for (const bin of bins) {
      const total = ((width / 2 - 30) * bin.count) / max;
      const y = rowY(bin.lo);
      let offset = 0;
      const segments = bin.segments?.length
        ? bin.segments
        : [{ name: 'count', count: bin.count, color: direction < 0 ? '#4878a8' : '#777777' }];
      for (const segment of segments) {
        const w = bin.count ? (total * segment.count) / bin.count : 0;
        const rect = svgElement('rect', {
          x: direction < 0 ? mid - offset - w : mid + offset,
          y,
          width: Math.max(w, segment.count > 0 ? 0.5 : 0),
          height: barHeight - 1,
          fill: segment.color,
        });
        rect.dataset.bin = `${bin.lo}`;
        rect.dataset.segment = segment.name;
        svg.appendChild(rect);
        offset += w;
      }
    }
  };
  drawSide(left, -1, options.independentSideScale ? leftMax : sharedMax);
  drawSide(right, 1, options.independentSideScale ? rightMax : sharedMax);

  const axis = svgElement('line', { x1: mid, y1: 16, x2: mid, y2: height - 20, stroke: '#333' });
  svg.appendChild(axis);
  const zeroY = rowY(0) + barHeight / 2;
  svg.appendChild(svgElement('line', {
    x1: 20, y1: zeroY, x2: width - 20, y2: zeroY, stroke: '#aaa', 'stroke-dasharray': '4,4',
  }));

  const leftText = svgElement('text', { x: 24, y: 12, 'font-size': 11 });
  leftText.textContent = options.leftLabel;
  svg.appendChild(leftText);
  const rightText = svgElement('text', { x: mid + 24, y: 12, 'font-size': 11 });
  rightText.textContent = options.rightLabel;
  svg.appendChild(rightText);

  const wrap = document.createElement('figure');
  wrap.className = 'histogram';
  wrap.appendChild(svg);

  const sideCounts = document.createElement('div');
  sideCounts.className = 'side-counts';
  const pos = document.createElement('span');
  pos.className = 'pos-count';
  pos.textContent = `|p+| = ${options.posCount}`;
  const neg = document.createElement('span');
  neg.className = 'neg-count';
  neg.textContent = `|p-| = ${options.negCount}`;
  sideCounts.append(pos, ' ', neg);
  wrap.appendChild(sideCounts);

  if (options.caption) {
    const caption = document.createElement('figcaption');
    caption.textContent = options.caption;
    wrap.appendChild(caption);
  }
  return wrap;
}
