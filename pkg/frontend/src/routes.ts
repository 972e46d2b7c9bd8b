// Role-based route guard: developers get the wizard, player and board;
// coaches get the dashboard and board. A coach never gets another
// learner's wizard (the API would reject the submission anyway).

export type Route = 'wizard' | 'topic-player' | 'board' | 'coach-dashboard';
export type Role = 'developer' | 'coach';

const ROUTES: Record<Role, Route[]> = {
  developer: ['wizard', 'topic-player', 'board'],
  coach: ['board', 'coach-dashboard'],
};

export function allowedRoutes(role: Role): Route[] {
  return [...ROUTES[role]];
}

export function canVisit(role: Role, route: Route): boolean {
  return ROUTES[role].includes(route);
}

export function defaultRoute(role: Role): Route {
  return role === 'coach' ? 'coach-dashboard' : 'wizard';
}
