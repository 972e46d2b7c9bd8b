// Entry point: sign in with a principal id, then route by role.

import { Api, ApiError } from './api.js';
import { Route, allowedRoutes, defaultRoute } from './routes.js';
import { renderBoard, renderDashboard, renderPlayer, renderWizard } from './views.js';

const ROUTE_LABELS: Record<Route, string> = {
  wizard: 'Questionnaire',
  'topic-player': 'Learn',
  board: 'Board',
  'coach-dashboard': 'Dashboard',
};

function renderLogin(root: HTMLElement): void {
  root.innerHTML = '';
  const box = document.createElement('div');
  box.className = 'login';
  box.innerHTML = `
    <h2>Sign in</h2>
    <p>Enter the principal id your coach gave you.</p>
    <input id="principal-input" placeholder="principal id" />
    <button id="login-btn" class="primary">Continue</button>
    <p class="error-box" id="login-error" hidden></p>
  `;
  root.appendChild(box);
  const input = box.querySelector<HTMLInputElement>('#principal-input')!;
  const button = box.querySelector<HTMLButtonElement>('#login-btn')!;
  const error = box.querySelector<HTMLElement>('#login-error')!;
  button.addEventListener('click', async () => {
    const id = input.value.trim();
    const api = new Api(id);
    try {
      const me = await api.whoami(id);
      window.sessionStorage.setItem('principal', JSON.stringify(me));
      renderApp(root, api, me);
    } catch (err) {
      error.hidden = false;
      error.textContent = err instanceof ApiError ? err.detail : String(err);
    }
  });
}

function renderApp(
  root: HTMLElement,
  api: Api,
  me: { id: string; role: 'developer' | 'coach' },
): void {
  root.innerHTML = '';
  const nav = document.createElement('nav');
  nav.className = 'topnav';
  const content = document.createElement('main');
  root.append(nav, content);

  const go = (route: Route) => {
    for (const btn of nav.querySelectorAll('button')) {
      btn.classList.toggle('active', btn.dataset.route === route);
    }
    switch (route) {
      case 'wizard':
        void renderWizard(content, api, me.id);
        break;
      case 'topic-player':
        void renderPlayer(content, api, me.id);
        break;
      case 'board':
        void renderBoard(content, api, me.id);
        break;
      case 'coach-dashboard':
        renderDashboard(content, api);
        break;
    }
  };

  for (const route of allowedRoutes(me.role)) {
    const btn = document.createElement('button');
    btn.textContent = ROUTE_LABELS[route];
    btn.dataset.route = route;
    btn.addEventListener('click', () => go(route));
    nav.appendChild(btn);
  }
  const who = document.createElement('span');
  who.className = 'whoami';
  who.textContent = `${me.id} (${me.role})`;
  nav.appendChild(who);

  go(defaultRoute(me.role));
}

const root = document.getElementById('app');
if (root) {
  const stored = window.sessionStorage.getItem('principal');
  if (stored) {
    const me = JSON.parse(stored) as { id: string; role: 'developer' | 'coach' };
    renderApp(root, new Api(me.id), me);
  } else {
    renderLogin(root);
  }
}
