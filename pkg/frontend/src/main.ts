import { OpsClient } from "./api.js";
import { buildBoard } from "./board.js";
import { buildCoverageGrid, undercoveredCount } from "./grid.js";
import { renderBoard, renderGrid } from "./render.js";
import type { Resolution } from "./types.js";

export const POLL_MS = 2000;

interface Page {
  board: HTMLElement;
  grid: HTMLElement;
  status: HTMLElement;
}

// Local calendar date; the server normalizes any day to its Monday.
export function todayIso(): string {
  const d = new Date();
  const pad = (n: number) => String(n).padStart(2, "0");
  return `${d.getFullYear()}-${pad(d.getMonth() + 1)}-${pad(d.getDate())}`;
}

function showError(page: Page, err: unknown): void {
  page.status.textContent = err instanceof Error ? err.message : String(err);
  page.status.classList.add("status-err");
}

export async function refresh(client: OpsClient, page: Page): Promise<void> {
  const [requests, schedule] = await Promise.all([
    client.listRequests(),
    client.schedule(todayIso()),
  ]);

  const claimed = requests.filter((r) => r.state === "Claimed");
  const candidates = new Map(
    await Promise.all(
      claimed.map(async (r) => [r.id, await client.candidates(r.id)] as const),
    ),
  );

  const act = async (fn: () => Promise<unknown>) => {
    try {
      await fn();
    } catch (err) {
      showError(page, err);
      return;
    }
    await refresh(client, page);
  };

  renderBoard(page.board, buildBoard(requests), candidates, {
    onClaim: (id) => void act(() => client.claim(id)),
    onResolve: (id, resolution: Resolution) =>
      void act(() => client.resolve(id, resolution)),
  });

  const grid = buildCoverageGrid(schedule);
  renderGrid(page.grid, grid);

  const under = undercoveredCount(grid);
  page.status.textContent =
    `week of ${schedule.week} · ${requests.length} requests · ` +
    (under === 0 ? "coverage ok" : `${under} slots undercovered`);
  page.status.classList.remove("status-err");
}

export function start(): void {
  const board = document.getElementById("board");
  const grid = document.getElementById("grid");
  const status = document.getElementById("status");
  if (!board || !grid || !status) return;

  const page: Page = { board, grid, status };
  const client = new OpsClient();
  const tick = () => {
    refresh(client, page).catch((err) => showError(page, err));
  };
  tick();
  setInterval(tick, POLL_MS);
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  start();
}
