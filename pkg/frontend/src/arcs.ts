/** Arc layout for link rendering: arcs run above the text line between the
 * anchor x positions of the parent and child spans. Height grows with
 * nesting depth so arcs contained in wider arcs sit below them. */

export interface ArcInput {
  linkId: number;
  type: string;
  fromX: number;
  toX: number;
}

export interface ArcSpec extends ArcInput {
  /** 1 = innermost; an arc spanning others sits one level above them. */
  level: number;
}

export function layoutArcs(inputs: ArcInput[]): ArcSpec[] {
  const arcs = inputs
    .map((arc) => ({ ...arc, lo: Math.min(arc.fromX, arc.toX), hi: Math.max(arc.fromX, arc.toX) }))
    .sort((a, b) => a.hi - a.lo - (b.hi - b.lo) || a.linkId - b.linkId);
  const placed: (ArcSpec & { lo: number; hi: number })[] = [];
  for (const arc of arcs) {
    let level = 1;
    for (const other of placed) {
      const contained = arc.lo <= other.lo && other.hi <= arc.hi;
      if (contained) {
        level = Math.max(level, other.level + 1);
      }
    }
    placed.push({ ...arc, level });
  }
  placed.sort((a, b) => a.linkId - b.linkId);
  return placed.map(({ lo: _lo, hi: _hi, ...spec }) => spec);
}

/** SVG path for one arc (a flat-topped cubic curve). */
export function arcPath(spec: ArcSpec, baseY: number, unit = 14): string {
  const y = baseY - spec.level * unit;
  const { fromX, toX } = spec;
  return `M ${fromX} ${baseY} C ${fromX} ${y}, ${toX} ${y}, ${toX} ${baseY}`;
}
