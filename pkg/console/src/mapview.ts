/** Pure map rendering: nav view JSON to a character grid. Row 0 prints first,
 * so North (decreasing y) is at the top, matching the walk coordinates. */

import type { NavView } from "./api.js";

const HEADING_GLYPH: Record<string, string> = {
  North: "^",
  East: ">",
  South: "v",
  West: "<",
};

export const LEGEND =
  "^>v< walker   G goal   * path   # wall   X found obstacle   o injected   + place";

function key(cell: [number, number]): string {
  return `${cell[0]},${cell[1]}`;
}

export function renderMapText(nav: NavView): string {
  const { width, height, blocked, places } = nav.map;
  const wall = new Set(blocked.map(key));
  const discovered = new Set(nav.discovered.map(key));
  const dynamic = new Set(nav.dynamic_blocked.map(key));
  const path = new Set(nav.path.map(key));
  const placeCells = new Set(Object.values(places).map(key));
  const goal = key(nav.goal);
  const walker = key(nav.walker.cell);

  const rows: string[] = [];
  for (let y = 0; y < height; y++) {
    let row = "";
    for (let x = 0; x < width; x++) {
      const k = `${x},${y}`;
      if (k === walker) row += HEADING_GLYPH[nav.walker.heading] ?? "@";
      else if (k === goal) row += "G";
      else if (discovered.has(k)) row += "X";
      else if (dynamic.has(k)) row += "o";
      else if (wall.has(k)) row += "#";
      else if (path.has(k)) row += "*";
      else if (placeCells.has(k)) row += "+";
      else row += ".";
    }
    rows.push(row);
  }
  return rows.join("\n");
}

/** Client-side bounds check for obstacle injection. */
export function cellInBounds(nav: NavView, x: number, y: number): boolean {
  return (
    Number.isInteger(x) &&
    Number.isInteger(y) &&
    x >= 0 &&
    y >= 0 &&
    x < nav.map.width &&
    y < nav.map.height
  );
}
