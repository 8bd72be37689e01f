/**
 * Batch queue: the signed-in annotator labels assigned posts in server
 * order (most uncertain first).
 *
 * Keyboard path: p = positive, n = negative, 1..5 = certainty,
 * Enter = submit, u = unset certainty. Submission is optimistic: the
 * queue advances immediately and rolls back if the server rejects.
 * A stale criteria version blocks labeling behind an acknowledgment
 * modal showing the new text.
 */

import { ApiClient, StaleCriteriaError, newIdempotencyKey } from './api.js';
import { sanitizeHtml } from './sanitize.js';
import type { BatchPost, CriteriaResponse, IterationView, Label, Progress } from './types.js';

interface QueueEntry {
  post: BatchPost;
  overlap: boolean;
  /** reused across retries so replays stay idempotent */
  idempotencyKey: string;
}

export class QueueView {
  private entries: QueueEntry[] = [];
  private cursor = 0;
  private selectedLabel: Label | null = null;
  private certainty: number | null = null;
  private rationale = '';
  private criteriaVersion = 0;
  private criteriaText = '';
  private blockedByCriteria = false;
  private pendingSubmit = false;
  private progress: Progress | null = null;
  private message = '';

  constructor(
    private api: ApiClient,
    private root: HTMLElement,
  ) {
    this.root.addEventListener('keydown', (event) => this.onKey(event as KeyboardEvent));
  }

  async load(): Promise<void> {
    const [iteration, criteria] = await Promise.all([
      this.api.currentIteration(),
      this.api.criteria(),
    ]);
    this.applyCriteria(criteria);
    const batch = await this.api.batch(iteration.index, this.api.annotator);
    const counterpart = this.counterpartAssignments(iteration);
    this.entries = batch.posts.map((post) => ({
      post,
      overlap: counterpart.has(post.post_id),
      idempotencyKey: newIdempotencyKey(),
    }));
    this.cursor = this.entries.findIndex((entry) => entry.post.label === null);
    if (this.cursor < 0) {
      this.cursor = this.entries.length;
    }
    this.progress = iteration.progress?.[this.api.annotator] ?? null;
    this.render();
  }

  private counterpartAssignments(iteration: IterationView): Set<number> {
    const mine = this.api.annotator;
    const others = Object.entries(iteration.assignments)
      .filter(([annotator]) => annotator !== mine)
      .flatMap(([, ids]) => ids);
    return new Set(others);
  }

  private applyCriteria(criteria: CriteriaResponse): void {
    this.criteriaVersion = criteria.current_version;
    const current = criteria.versions.find((v) => v.version === criteria.current_version);
    this.criteriaText = current?.text ?? '';
    this.blockedByCriteria = false;
  }

  get current(): QueueEntry | null {
    return this.entries[this.cursor] ?? null;
  }

  private onKey(event: KeyboardEvent): void {
    if (this.blockedByCriteria) {
      return; // acknowledgment button is the only way out
    }
    if (event.target instanceof HTMLTextAreaElement) {
      return; // typing a rationale
    }
    switch (event.key) {
      case 'p':
        this.selectedLabel = 'positive';
        break;
      case 'n':
        this.selectedLabel = 'negative';
        break;
      case '1':
      case '2':
      case '3':
      case '4':
      case '5':
        this.certainty = Number(event.key);
        break;
      case 'u':
        this.certainty = null;
        break;
      case 'Enter':
        void this.submit();
        return;
      default:
        return;
    }
    event.preventDefault();
    this.render();
  }

  async submit(): Promise<void> {
    const entry = this.current;
    if (!entry || this.pendingSubmit || this.blockedByCriteria) {
      return;
    }
    if (!this.selectedLabel) {
      this.message = 'pick a label first (p / n)';
      this.render();
      return;
    }
    if (entry.overlap && this.certainty === null) {
      this.message = 'certainty (1-5) is required on shared posts';
      this.render();
      return;
    }
    const submission = {
      post_id: entry.post.post_id,
      label: this.selectedLabel,
      criteria_version: this.criteriaVersion,
      certainty: this.certainty,
      rationale: this.rationale || null,
      idempotency_key: entry.idempotencyKey,
    };
    // optimistic advance; rolled back on rejection
    const submittedAt = this.cursor;
    this.pendingSubmit = true;
    this.cursor += 1;
    this.resetEntryState();
    this.render();
    try {
      const response = await this.api.submitLabel(submission);
      this.progress = response.progress;
      entry.post.label = submission.label;
      this.message = '';
    } catch (failure) {
      this.cursor = submittedAt;
      if (failure instanceof StaleCriteriaError) {
        this.blockedByCriteria = true;
        this.message = `annotation criteria changed (now v${failure.currentVersion}); review before continuing`;
        const criteria = await this.api.criteria();
        this.criteriaText =
          criteria.versions.find((v) => v.version === criteria.current_version)?.text ?? '';
        this.criteriaVersion = criteria.current_version;
      } else {
        this.message = failure instanceof Error ? failure.message : String(failure);
      }
    } finally {
      this.pendingSubmit = false;
      this.render();
    }
  }

  /** The acknowledgment callback for the stale-criteria modal. */
  acknowledgeCriteria(): void {
    this.blockedByCriteria = false;
    this.message = '';
    this.render();
  }

  setRationale(text: string): void {
    this.rationale = text;
  }

  private resetEntryState(): void {
    this.selectedLabel = null;
    this.certainty = null;
    this.rationale = '';
  }

  render(): void {
    this.root.textContent = '';
    this.root.tabIndex = 0;
    this.root.appendChild(this.criteriaBanner());

    if (this.blockedByCriteria) {
      this.root.appendChild(this.criteriaModal());
      return;
    }

    const progressLine = document.createElement('div');
    progressLine.className = 'progress';
    if (this.progress) {
      progressLine.textContent =
        `progress ${this.progress.labeled}/${this.progress.total} (${this.progress.remaining} remaining)`;
    } else {
      progressLine.textContent = 'progress unavailable';
    }
    this.root.appendChild(progressLine);

    const entry = this.current;
    if (!entry) {
      const done = document.createElement('p');
      done.className = 'empty-state';
      done.textContent = this.entries.length
        ? 'batch complete: every assigned post is labeled'
        : 'no assignments in the current iteration';
      this.root.appendChild(done);
      return;
    }

    const header = document.createElement('div');
    header.className = 'post-header';
    header.textContent =
      `post ${entry.post.post_id} (${entry.post.kind}) ` +
      `[${entry.post.tags.join(', ')}] ` +
      `${this.cursor + 1} of ${this.entries.length}` +
      (entry.overlap ? ' - shared with the other annotator' : '');
    this.root.appendChild(header);

    this.root.appendChild(sanitizeHtml(entry.post.body_html));

    const controls = document.createElement('div');
    controls.className = 'controls';
    controls.appendChild(this.labelButton('positive', 'p'));
    controls.appendChild(this.labelButton('negative', 'n'));
    controls.appendChild(this.certaintyPicker(entry));
    controls.appendChild(this.rationaleBox());
    controls.appendChild(this.submitButton());
    this.root.appendChild(controls);

    if (this.message) {
      const note = document.createElement('div');
      note.className = 'message';
      note.textContent = this.message;
      this.root.appendChild(note);
    }
  }

  private criteriaBanner(): HTMLElement {
    const banner = document.createElement('div');
    banner.className = 'criteria-banner';
    const title = document.createElement('strong');
    title.textContent = `annotation criteria v${this.criteriaVersion}`;
    banner.appendChild(title);
    const text = document.createElement('pre');
    text.className = 'criteria-text';
    text.textContent = this.criteriaText;
    banner.appendChild(text);
    return banner;
  }

  private criteriaModal(): HTMLElement {
    const modal = document.createElement('div');
    modal.className = 'criteria-modal';
    const note = document.createElement('p');
    note.textContent = this.message;
    modal.appendChild(note);
    const button = document.createElement('button');
    button.className = 'ack-criteria';
    button.textContent = `I have read criteria v${this.criteriaVersion}`;
    button.addEventListener('click', () => this.acknowledgeCriteria());
    modal.appendChild(button);
    return modal;
  }

  private labelButton(label: Label, key: string): HTMLElement {
    const button = document.createElement('button');
    button.className = `label-${label}` + (this.selectedLabel === label ? ' selected' : '');
    button.textContent = `${label} (${key})`;
    button.addEventListener('click', () => {
      this.selectedLabel = label;
      this.render();
    });
    return button;
  }

  private certaintyPicker(entry: QueueEntry): HTMLElement {
    const wrap = document.createElement('span');
    wrap.className = 'certainty';
    const caption = document.createElement('span');
    caption.textContent = entry.overlap ? 'certainty (required): ' : 'certainty: ';
    wrap.appendChild(caption);
    for (let value = 1; value <= 5; value += 1) {
      const button = document.createElement('button');
      button.textContent = String(value);
      button.className = this.certainty === value ? 'selected' : '';
      button.addEventListener('click', () => {
        this.certainty = value;
        this.render();
      });
      wrap.appendChild(button);
    }
    return wrap;
  }

  private rationaleBox(): HTMLElement {
    const box = document.createElement('textarea');
    box.className = 'rationale';
    box.placeholder = 'rationale (optional, required wording lives in the criteria)';
    box.value = this.rationale;
    box.addEventListener('input', () => this.setRationale(box.value));
    return box;
  }

  private submitButton(): HTMLElement {
    const button = document.createElement('button');
    button.className = 'submit';
    button.textContent = 'submit (Enter)';
    button.disabled = this.pendingSubmit;
    button.addEventListener('click', () => void this.submit());
    return button;
  }
}
