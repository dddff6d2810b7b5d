/** Split document text into atomic segments so overlapping highlights can
 * nest: each segment is wrapped once per covering span, outermost (longest)
 * span first. Zero-width spans become caret markers between segments. */

export interface SpanLike {
  id: number;
  begin: number;
  end: number;
  type: string;
}

export interface Segment {
  begin: number;
  end: number;
  /** Covering spans, outermost first: begin asc, end desc, id asc. */
  covering: SpanLike[];
}

export function spanOrder(a: SpanLike, b: SpanLike): number {
  return a.begin - b.begin || b.end - a.end || a.id - b.id;
}

export function computeSegments(textLength: number, spans: SpanLike[]): Segment[] {
  const bounds = new Set<number>([0, textLength]);
  for (const span of spans) {
    // zero-width spans contribute a boundary so carets can sit between segments
    bounds.add(span.begin);
    bounds.add(span.end);
  }
  const sorted = [...bounds].filter((b) => b >= 0 && b <= textLength).sort((x, y) => x - y);
  const covering = spans.filter((s) => s.begin < s.end).sort(spanOrder);
  const out: Segment[] = [];
  for (let i = 0; i + 1 < sorted.length; i++) {
    const begin = sorted[i];
    const end = sorted[i + 1];
    out.push({
      begin,
      end,
      covering: covering.filter((s) => s.begin <= begin && end <= s.end),
    });
  }
  if (out.length === 0 && textLength === 0) {
    out.push({ begin: 0, end: 0, covering: [] });
  }
  return out;
}

/** Zero-width spans anchored at an offset, in id order. */
export function zeroWidthAt(spans: SpanLike[], offset: number): SpanLike[] {
  return spans
    .filter((s) => s.begin === s.end && s.begin === offset)
    .sort((a, b) => a.id - b.id);
}

/** All offsets holding at least one zero-width span. */
export function caretOffsets(spans: SpanLike[]): number[] {
  return [...new Set(spans.filter((s) => s.begin === s.end).map((s) => s.begin))].sort(
    (a, b) => a - b,
  );
}
