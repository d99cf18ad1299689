import type { BoardModel } from "./board.js";
import type { CoverageGrid } from "./grid.js";
import { cellKey, minuteLabel } from "./grid.js";
import type { Resolution, SwapRequest } from "./types.js";

export interface BoardHandlers {
  onClaim(id: string): void;
  onResolve(id: string, resolution: Resolution): void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function durationLabel(req: SwapRequest): string {
  if (req.duration_of_change.kind === "Until") {
    return `until ${req.duration_of_change.end}`;
  }
  return "one-off";
}

function requestCard(
  req: SwapRequest,
  candidates: string[],
  handlers: BoardHandlers,
): HTMLElement {
  const card = el("div", "card");
  card.dataset.requestId = req.id;

  const head = el("div", "card-head");
  head.append(el("span", "card-id", req.id));
  head.append(el("span", "card-date", req.occurrence_date));
  card.append(head);

  card.append(
    el("div", "card-line", `${req.requester} · ${req.shift_id} · ${durationLabel(req)}`),
  );
  if (req.reason) card.append(el("div", "card-reason", req.reason));
  if (req.claimed_by) card.append(el("div", "card-line", `claimed by ${req.claimed_by}`));
  if (req.resolution) {
    let text = req.resolution.kind;
    if (req.resolution.substitute) text += ` → ${req.resolution.substitute}`;
    if (req.revert_date) text += ` (reverts ${req.revert_date})`;
    card.append(el("div", "card-line", text));
  }

  if (req.state === "Submitted") {
    const claim = el("button", "btn", "Claim");
    claim.dataset.action = "claim";
    claim.addEventListener("click", () => handlers.onClaim(req.id));
    card.append(claim);
  } else if (req.state === "Claimed") {
    const row = el("div", "card-actions");
    const select = el("select", "sub-select");
    select.dataset.action = "substitute";
    for (const ta of candidates) {
      const opt = el("option", undefined, ta);
      opt.value = ta;
      select.append(opt);
    }
    const replace = el("button", "btn", "Replace");
    replace.dataset.action = "replace";
    replace.disabled = candidates.length === 0;
    replace.addEventListener("click", () => {
      if (select.value) {
        handlers.onResolve(req.id, { kind: "Replacement", substitute: select.value });
      }
    });
    const cancel = el("button", "btn btn-quiet", "Cancel shift");
    cancel.dataset.action = "cancel";
    cancel.addEventListener("click", () =>
      handlers.onResolve(req.id, { kind: "Cancelled" }),
    );
    row.append(select, replace, cancel);
    card.append(row);
  }

  return card;
}

export function renderBoard(
  root: HTMLElement,
  model: BoardModel,
  candidates: Map<string, string[]>,
  handlers: BoardHandlers,
): void {
  root.replaceChildren();
  for (const column of model) {
    const col = el("section", "board-column");
    col.dataset.state = column.state;
    col.append(el("h3", "column-title", `${column.state} (${column.requests.length})`));
    const body = el("div", "column-body");
    for (const req of column.requests) {
      body.append(requestCard(req, candidates.get(req.id) ?? [], handlers));
    }
    col.append(body);
    root.append(col);
  }
}

export function renderGrid(root: HTMLElement, grid: CoverageGrid): void {
  root.replaceChildren();
  const table = el("table", "coverage-table");

  const head = el("tr");
  head.append(el("th"));
  for (const day of grid.days) head.append(el("th", undefined, day));
  table.append(head);

  for (const start of grid.startMinutes) {
    const row = el("tr");
    row.append(el("th", "row-label", minuteLabel(start)));
    for (const day of grid.days) {
      const cell = grid.cells.get(cellKey(day, start));
      if (!cell) {
        row.append(el("td", "cell cell-empty"));
        continue;
      }
      const td = el(
        "td",
        cell.undercovered ? "cell cell-under" : "cell cell-ok",
        `${cell.assigned}/${cell.required}`,
      );
      td.title = cell.tas.join(", ");
      row.append(td);
    }
    table.append(row);
  }

  root.append(table);
}
