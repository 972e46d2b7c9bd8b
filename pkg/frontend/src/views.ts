// Thin DOM layer over the pure cores: builds elements, wires events,
// and re-renders from API responses.

import { Api, ApiError, NextStep, Profile } from './api.js';
import { burndownChart, gainHistogram, groupRows, verdictBadge } from './charts.js';
import { PlayerCore } from './player.js';
import { ITEM_COUNT, profileBars, resumeWizard } from './wizard.js';

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className = '',
  text = '',
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text) node.textContent = text;
  return node;
}

function errorBox(message: string): HTMLElement {
  return el('div', 'error-box', message);
}

// --- ILS wizard -----------------------------------------------------------

export async function renderWizard(root: HTMLElement, api: Api, learnerId: string): Promise<void> {
  root.innerHTML = '';
  try {
    const profile = await api.profile(learnerId);
    renderProfile(root, profile);
    return;
  } catch {
    // not scored yet: show the questionnaire
  }
  const state = await resumeWizard(api, learnerId);

  const form = el('div', 'wizard');
  form.appendChild(el('h2', '', 'Learning style questionnaire'));
  const status = el('p', 'wizard-status');
  const submit = el('button', 'primary', 'Submit answers');
  submit.setAttribute('data-testid', 'wizard-submit');

  const sync = () => {
    status.textContent = `${state.answeredCount} of ${ITEM_COUNT} answered`;
    submit.disabled = !state.canSubmit;
  };

  for (let item = 1; item <= ITEM_COUNT; item++) {
    const row = el('fieldset', 'wizard-item');
    row.appendChild(el('legend', '', `Item ${item}`));
    for (const option of ['a', 'b'] as const) {
      const label = el('label');
      const input = document.createElement('input');
      input.type = 'radio';
      input.name = `item-${item}`;
      input.value = option;
      input.checked = state.answerOf(item) === option;
      input.addEventListener('change', () => {
        state.answer(item, option);
        sync();
      });
      label.appendChild(input);
      label.appendChild(document.createTextNode(` ${option}`));
      row.appendChild(label);
    }
    form.appendChild(row);
  }

  submit.addEventListener('click', async () => {
    submit.disabled = true;
    try {
      const result = await api.submitSheet(state.toPayload());
      if (result.scored && result.profile) {
        root.innerHTML = '';
        renderProfile(root, result.profile);
      }
    } catch (err) {
      form.appendChild(errorBox(err instanceof ApiError ? err.detail : String(err)));
      submit.disabled = !state.canSubmit;
    }
  });

  form.appendChild(status);
  form.appendChild(submit);
  root.appendChild(form);
  sync();
}

export function renderProfile(root: HTMLElement, profile: Profile): void {
  const box = el('div', 'profile');
  box.appendChild(el('h2', '', 'Your learning profile'));
  box.appendChild(
    el('p', 'style-label', `Processing style: ${profile.processing_style}`),
  );
  const bars = el('div', 'profile-bars');
  for (const bar of profileBars(profile)) {
    const column = el('div', 'bar-column');
    const fill = el('div', `bar ${bar.value < 0 ? 'negative' : 'positive'}`);
    fill.style.height = `${bar.height}%`;
    fill.title = `${bar.label}: ${bar.value}`;
    column.appendChild(fill);
    column.appendChild(el('span', 'bar-label', `${bar.label} (${bar.value})`));
    bars.appendChild(column);
  }
  box.appendChild(bars);
  root.appendChild(box);
}

// --- topic player -----------------------------------------------------------

const STEP_TITLES: Record<string, string> = {
  show_content: 'Content',
  request_reflection: 'Reflect and submit',
  request_group_work: 'Group activity',
  request_individual_work: 'Individual exercise',
};

export async function renderPlayer(root: HTMLElement, api: Api, learnerId: string): Promise<void> {
  root.innerHTML = '';
  let sessionId = window.localStorage.getItem(`session:${learnerId}`);
  if (!sessionId) {
    try {
      const session = await api.createSession(learnerId);
      sessionId = session.session_id;
      window.localStorage.setItem(`session:${learnerId}`, sessionId);
    } catch (err) {
      root.appendChild(
        errorBox(
          err instanceof ApiError && err.status === 404
            ? 'Complete the questionnaire first: the session needs your scored profile.'
            : String(err),
        ),
      );
      return;
    }
  }
  const player = new PlayerCore(api, sessionId);
  const card = el('div', 'player');
  root.appendChild(card);
  await player.refresh();
  paintPlayer(card, api, player, sessionId);
}

function paintPlayer(card: HTMLElement, api: Api, player: PlayerCore, sessionId: string): void {
  const view = player.view();
  card.innerHTML = '';
  void api.progress(sessionId).then((p) => {
    bar.style.width = `${Math.round(p.percent * 100)}%`;
    counter.textContent = `${p.steps_completed} steps, ${p.topics_completed} topics done (${Math.round(
      p.percent * 100,
    )}%)`;
  });
  const progress = el('div', 'progress-track');
  const bar = el('div', 'progress-fill');
  progress.appendChild(bar);
  const counter = el('p', 'progress-counter');
  card.appendChild(progress);
  card.appendChild(counter);

  if (view.status === 'done') {
    card.appendChild(el('h2', '', 'Instruction complete'));
    card.appendChild(el('p', '', 'Progress 100%. Your team can now start the capstone sprint.'));
    return;
  }
  const step = view.step as NextStep;
  card.appendChild(el('h2', '', STEP_TITLES[step.kind ?? 'show_content']));
  card.appendChild(el('h3', 'topic-id', step.topic_id ?? ''));
  card.appendChild(el('p', 'step-body', step.payload ?? ''));

  let submissionBox: HTMLTextAreaElement | null = null;
  let participantsBox: HTMLInputElement | null = null;
  if (step.kind === 'request_reflection' || step.kind === 'request_individual_work') {
    submissionBox = document.createElement('textarea');
    submissionBox.placeholder = 'Write your submission here';
    card.appendChild(submissionBox);
  } else if (step.kind === 'request_group_work') {
    participantsBox = document.createElement('input');
    participantsBox.placeholder = 'Participant ids, comma-separated';
    card.appendChild(participantsBox);
    submissionBox = document.createElement('textarea');
    submissionBox.placeholder = 'Shared group submission';
    card.appendChild(submissionBox);
  }

  const advance = el('button', 'primary', step.submission_required ? 'Submit and continue' : 'Continue');
  advance.setAttribute('data-testid', 'player-advance');
  if (view.status === 'blocked') {
    advance.disabled = true;
    card.appendChild(errorBox(`Out of sync: ${view.error ?? 'step already completed'}`));
    const retry = el('button', '', 'Reload current step');
    retry.addEventListener('click', async () => {
      await player.refresh();
      paintPlayer(card, api, player, sessionId);
    });
    card.appendChild(retry);
  }
  advance.addEventListener('click', async () => {
    const participants = participantsBox?.value
      .split(',')
      .map((s) => s.trim())
      .filter(Boolean);
    await player.advance(submissionBox?.value || undefined, participants);
    paintPlayer(card, api, player, sessionId);
  });
  card.appendChild(advance);
}

// --- coach dashboard -----------------------------------------------------------

export function renderDashboard(root: HTMLElement, api: Api): void {
  root.innerHTML = '';
  const wrap = el('div', 'dashboard');
  wrap.appendChild(el('h2', '', 'Coach dashboard'));

  const burndownSection = el('section', 'burndown-section');
  burndownSection.appendChild(el('h3', '', 'Sprint burndown'));
  const teamInput = el('input') as HTMLInputElement;
  teamInput.placeholder = 'team id';
  const sprintInput = el('input') as HTMLInputElement;
  sprintInput.placeholder = 'sprint id';
  const loadBtn = el('button', '', 'Load burndown');
  const chartHost = el('div', 'chart-host');
  chartHost.appendChild(el('p', 'placeholder', 'No sprint loaded yet.'));
  loadBtn.addEventListener('click', async () => {
    chartHost.innerHTML = '';
    try {
      const series = await api.burndown(teamInput.value.trim(), sprintInput.value.trim());
      const metrics = await api.sprintMetrics(teamInput.value.trim(), sprintInput.value.trim());
      chartHost.innerHTML = burndownChart(series).svg;
      const facts = el('ul', 'metrics');
      facts.appendChild(el('li', '', `work capacity: ${metrics.work_capacity_hours}h`));
      facts.appendChild(el('li', '', `velocity: ${metrics.velocity_points} points`));
      facts.appendChild(
        el(
          'li',
          '',
          `estimation accuracy: ${metrics.estimation_accuracy === null ? 'n/a' : metrics.estimation_accuracy.toFixed(2)}`,
        ),
      );
      chartHost.appendChild(facts);
    } catch (err) {
      chartHost.appendChild(errorBox(err instanceof ApiError ? err.detail : String(err)));
    }
  });
  burndownSection.append(teamInput, sprintInput, loadBtn, chartHost);
  wrap.appendChild(burndownSection);

  const gainSection = el('section', 'gains-section');
  gainSection.appendChild(el('h3', '', 'Learning gains'));
  const csvBox = document.createElement('textarea');
  csvBox.placeholder = 'Paste gains CSV (learner_id,style,method,pre,post)';
  const analyzeBtn = el('button', 'primary', 'Analyze');
  const reportHost = el('div', 'report-host');
  reportHost.appendChild(el('p', 'placeholder', 'No analysis yet.'));
  analyzeBtn.addEventListener('click', async () => {
    reportHost.innerHTML = '';
    try {
      const report = await api.analyzeExperiment(csvBox.value);
      const badge = verdictBadge(report);
      const badgeEl = el(
        'span',
        `badge ${badge.significant ? 'significant' : 'not-significant'}`,
        badge.text,
      );
      reportHost.appendChild(badgeEl);

      const table = el('table', 'stats-table');
      const head = el('tr');
      for (const h of ['Group', 'M', 'ME', 'SD', 'n']) head.appendChild(el('th', '', h));
      table.appendChild(head);
      for (const row of groupRows(report)) {
        const tr = el('tr');
        tr.appendChild(el('td', '', row.group));
        tr.appendChild(el('td', '', row.M.toFixed(3)));
        tr.appendChild(el('td', '', row.ME.toFixed(3)));
        tr.appendChild(el('td', '', row.SD === null ? '-' : row.SD.toFixed(3)));
        tr.appendChild(el('td', '', String(row.n)));
        table.appendChild(tr);
      }
      reportHost.appendChild(table);

      const charts = el('div', 'histogram-pair');
      for (const group of Object.keys(report.gains)) {
        const cell = el('div', 'histogram-cell');
        cell.appendChild(el('h4', '', `${group} gains`));
        cell.innerHTML += gainHistogram(report.gains[group], group).svg;
        charts.appendChild(cell);
      }
      reportHost.appendChild(charts);
      reportHost.appendChild(el('p', 'verdict', report.verdict));
    } catch (err) {
      reportHost.appendChild(errorBox(err instanceof ApiError ? err.detail : String(err)));
    }
  });
  gainSection.append(csvBox, analyzeBtn, reportHost);
  wrap.appendChild(gainSection);
  root.appendChild(wrap);
}

// --- sprint board ------------------------------------------------------------

export async function renderBoard(root: HTMLElement, api: Api, principalId: string): Promise<void> {
  root.innerHTML = '';
  const wrap = el('div', 'board-view');
  wrap.appendChild(el('h2', '', 'Sprint board'));
  const teamInput = el('input') as HTMLInputElement;
  teamInput.placeholder = 'team id';
  const loadBtn = el('button', '', 'Load board');
  const host = el('div', 'board-host');
  host.appendChild(el('p', 'placeholder', 'Enter your team id to load the board.'));
  loadBtn.addEventListener('click', async () => {
    host.innerHTML = '';
    try {
      const board = (await api.board(teamInput.value.trim())) as {
        stories: {
          id: string;
          role: string;
          feature: string;
          status: string;
          story_points: number | null;
          tasks: { id: string; description: string; remaining_hours: number; status: string; assignee: string | null }[];
        }[];
      };
      for (const story of board.stories) {
        const card = el('div', `story status-${story.status}`);
        card.appendChild(
          el('h4', '', `${story.id} [${story.story_points ?? '?'} pts] as a ${story.role}, I want ${story.feature}`),
        );
        card.appendChild(el('span', 'status', story.status));
        for (const task of story.tasks) {
          const row = el('div', `task status-${task.status}`);
          row.appendChild(
            el('span', '', `${task.description}: ${task.remaining_hours}h left (${task.assignee ?? 'unassigned'})`),
          );
          const hours = el('input') as HTMLInputElement;
          hours.placeholder = 'hours spent';
          const remaining = el('input') as HTMLInputElement;
          remaining.placeholder = 'remaining';
          const log = el('button', '', 'Log');
          log.addEventListener('click', async () => {
            await api.logProgress(teamInput.value.trim(), task.id, {
              learner_id: principalId,
              hours_spent: Number(hours.value),
              remaining_hours: Number(remaining.value),
              on: new Date().toISOString().slice(0, 10),
            });
            loadBtn.click();
          });
          row.append(hours, remaining, log);
          card.appendChild(row);
        }
        host.appendChild(card);
      }
    } catch (err) {
      host.appendChild(errorBox(err instanceof ApiError ? err.detail : String(err)));
    }
  });
  wrap.append(teamInput, loadBtn, host);
  root.appendChild(wrap);
}
