/**
 * App shell: connection settings, hash routing between the labeling
 * queue, the disagreement review, and the dashboards. State polling,
 * no push channels.
 */

import { ApiClient } from './api.js';
import { loadDisagreements, renderDisagreements } from './disagreements.js';
import { renderDashboards } from './dashboards.js';
import { QueueView } from './queue.js';

interface Settings {
  baseUrl: string;
  projectId: string;
  annotator: string;
}

const SETTINGS_KEY = 'albench-ui-settings';

function loadSettings(): Settings {
  try {
    const raw = localStorage.getItem(SETTINGS_KEY);
    if (raw) {
      return JSON.parse(raw) as Settings;
    }
  } catch {
    // fall through to defaults
  }
  return { baseUrl: 'http://127.0.0.1:8000', projectId: '', annotator: 'a' };
}

function saveSettings(settings: Settings): void {
  localStorage.setItem(SETTINGS_KEY, JSON.stringify(settings));
}

function settingsForm(settings: Settings, onChange: (s: Settings) => void): HTMLElement {
  const form = document.createElement('form');
  form.className = 'settings';
  const fields: Array<[keyof Settings, string]> = [
    ['baseUrl', 'server'],
    ['projectId', 'project'],
    ['annotator', 'annotator'],
  ];
  const inputs = new Map<keyof Settings, HTMLInputElement>();
  for (const [key, label] of fields) {
    const wrap = document.createElement('label');
    wrap.textContent = `${label} `;
    const input = document.createElement('input');
    input.value = settings[key];
    input.name = key;
    inputs.set(key, input);
    wrap.appendChild(input);
    form.appendChild(wrap);
  }
  const apply = document.createElement('button');
  apply.textContent = 'connect';
  form.appendChild(apply);
  form.addEventListener('submit', (event) => {
    event.preventDefault();
    const next: Settings = {
      baseUrl: inputs.get('baseUrl')!.value.replace(/\/$/, ''),
      projectId: inputs.get('projectId')!.value.trim(),
      annotator: inputs.get('annotator')!.value.trim(),
    };
    saveSettings(next);
    onChange(next);
  });
  return form;
}

function nav(): HTMLElement {
  const bar = document.createElement('nav');
  for (const [hash, label] of [
    ['#/queue', 'label queue'],
    ['#/review', 'disagreements'],
    ['#/dashboards', 'dashboards'],
  ]) {
    const link = document.createElement('a');
    link.href = hash;
    link.textContent = label;
    bar.appendChild(link);
  }
  return bar;
}

async function route(api: ApiClient, outlet: HTMLElement): Promise<void> {
  outlet.textContent = '';
  const view = location.hash || '#/queue';
  try {
    if (view === '#/queue') {
      const queue = new QueueView(api, outlet);
      await queue.load();
      outlet.focus();
    } else if (view === '#/review') {
      const iteration = await api.currentIteration();
      const annotators = Object.keys(iteration.assignments);
      const data = await loadDisagreements(api, iteration.index, annotators);
      renderDisagreements(outlet, data);
    } else if (view === '#/dashboards') {
      await renderDashboards(api, outlet);
    } else {
      outlet.textContent = `unknown view ${view}`;
    }
  } catch (failure) {
    const error = document.createElement('p');
    error.className = 'error';
    error.textContent = failure instanceof Error ? failure.message : String(failure);
    outlet.appendChild(error);
  }
}

export function boot(root: HTMLElement): void {
  let settings = loadSettings();
  root.textContent = '';
  root.appendChild(
    settingsForm(settings, (next) => {
      settings = next;
      void route(makeClient(), outlet);
    }),
  );
  root.appendChild(nav());
  const outlet = document.createElement('main');
  outlet.id = 'outlet';
  root.appendChild(outlet);

  const makeClient = () =>
    new ApiClient({
      baseUrl: settings.baseUrl,
      projectId: settings.projectId,
      annotator: settings.annotator,
    });

  window.addEventListener('hashchange', () => void route(makeClient(), outlet));
  if (settings.projectId) {
    void route(makeClient(), outlet);
  } else {
    outlet.textContent = 'enter the server URL, project id, and your annotator id, then connect';
  }
}

if (typeof document !== 'undefined' && document.getElementById('app')) {
  boot(document.getElementById('app')!);
}
