/**
 * Overlap disagreement review: posts both annotators labeled, with
 * conflicting labels shown side by side.
 *
 * Conflicts sort by combined certainty, descending, so the cases where
 * both annotators felt sure come first. The header's agreement numbers
 * come from GET /agreement?scope=overlap, never from local math.
 */

import { ApiClient, ApiError } from './api.js';
import type { AgreementReport, BatchPost } from './types.js';

export interface Conflict {
  postId: number;
  bodyText: string;
  tags: string[];
  sides: Array<{
    annotator: string;
    label: string;
    certainty: number | null;
    rationale: string | null;
  }>;
  combinedCertainty: number;
  bothConfident: boolean;
}

export interface DisagreementData {
  conflicts: Conflict[];
  agreement: AgreementReport | null;
  sharedCount: number;
}

const CONFIDENT = 4; // certainty at or above this counts as "felt certain"

export async function loadDisagreements(
  api: ApiClient,
  iteration: number,
  annotators: string[],
): Promise<DisagreementData> {
  const batches = await Promise.all(annotators.map((a) => api.batch(iteration, a)));
  const byPost = new Map<number, Array<{ annotator: string; post: BatchPost }>>();
  for (const batch of batches) {
    for (const post of batch.posts) {
      if (post.label === null) {
        continue;
      }
      const existing = byPost.get(post.post_id) ?? [];
      existing.push({ annotator: batch.annotator, post });
      byPost.set(post.post_id, existing);
    }
  }

  const conflicts: Conflict[] = [];
  let sharedCount = 0;
  for (const [postId, sides] of byPost) {
    if (sides.length < 2) {
      continue;
    }
    sharedCount += 1;
    const labels = new Set(sides.map((s) => s.post.label));
    if (labels.size < 2) {
      continue;
    }
    const certainties = sides.map((s) => s.post.certainty ?? 0);
    conflicts.push({
      postId,
      bodyText: sides[0].post.body_text,
      tags: sides[0].post.tags,
      sides: sides.map((s) => ({
        annotator: s.annotator,
        label: s.post.label as string,
        certainty: s.post.certainty,
        rationale: s.post.rationale,
      })),
      combinedCertainty: certainties.reduce((a, b) => a + b, 0),
      bothConfident: sides.every((s) => (s.post.certainty ?? 0) >= CONFIDENT),
    });
  }
  conflicts.sort((a, b) => b.combinedCertainty - a.combinedCertainty || a.postId - b.postId);

  let agreement: AgreementReport | null = null;
  try {
    agreement = await api.agreement('overlap');
  } catch (failure) {
    if (!(failure instanceof ApiError && failure.status === 404)) {
      throw failure;
    }
    // no co-rated posts yet: the empty state explains the overlap config
  }
  return { conflicts, agreement, sharedCount };
}

export function renderDisagreements(root: HTMLElement, data: DisagreementData): void {
  root.textContent = '';

  const header = document.createElement('div');
  header.className = 'agreement-header';
  if (data.agreement) {
    const agreed = data.sharedCount - data.conflicts.length;
    const alpha = data.agreement.alpha_undefined
      ? 'undefined (single label)'
      : String(data.agreement.alpha_display);
    header.textContent =
      `${agreed}/${data.agreement.pairable_units} shared posts agree ` +
      `(${Math.round(data.agreement.percent_agreement * 100)}%), ` +
      `Krippendorff's alpha ${alpha}`;
  } else {
    header.textContent = 'no shared posts yet';
  }
  root.appendChild(header);

  if (data.conflicts.length === 0) {
    const empty = document.createElement('p');
    empty.className = 'empty-state';
    empty.textContent = data.sharedCount
      ? 'no conflicting labels on shared posts'
      : 'no overlap in this iteration: raise overlap_fraction in the project config to co-rate posts';
    root.appendChild(empty);
    return;
  }

  const list = document.createElement('div');
  list.className = 'conflict-list';
  for (const conflict of data.conflicts) {
    list.appendChild(renderConflict(conflict));
  }
  root.appendChild(list);
}

function renderConflict(conflict: Conflict): HTMLElement {
  const card = document.createElement('div');
  card.className = 'conflict';
  const title = document.createElement('div');
  title.className = 'conflict-title';
  title.textContent = `post ${conflict.postId} [${conflict.tags.join(', ')}]`;
  if (conflict.bothConfident) {
    const badge = document.createElement('span');
    badge.className = 'badge both-confident';
    badge.textContent = 'both confident';
    title.appendChild(badge);
  }
  card.appendChild(title);

  const body = document.createElement('p');
  body.className = 'conflict-body';
  body.textContent = conflict.bodyText;
  card.appendChild(body);

  const sides = document.createElement('div');
  sides.className = 'conflict-sides';
  for (const side of conflict.sides) {
    const cell = document.createElement('div');
    cell.className = 'conflict-side';
    const who = document.createElement('strong');
    who.textContent = `${side.annotator}: ${side.label}`;
    cell.appendChild(who);
    const meta = document.createElement('div');
    meta.textContent = `certainty ${side.certainty ?? 'unset'}`;
    cell.appendChild(meta);
    if (side.rationale) {
      const why = document.createElement('div');
      why.className = 'rationale-text';
      why.textContent = side.rationale;
      cell.appendChild(why);
    }
    sides.appendChild(cell);
  }
  card.appendChild(sides);
  return card;
}
