/** Stable per-type colors: the hue is a hash of the type name, so a type
 * renders the same color in every session and document. */

const FNV_OFFSET = 0x811c9dc5;
const FNV_PRIME = 0x01000193;

export function fnv1a32(text: string): number {
  let hash = FNV_OFFSET;
  const bytes = new TextEncoder().encode(text);
  for (const byte of bytes) {
    hash ^= byte;
    hash = Math.imul(hash, FNV_PRIME) >>> 0;
  }
  return hash >>> 0;
}

export const UNKNOWN_TYPE_COLOR = "hsl(0, 0%, 62%)";

export function typeColor(typeName: string, known = true): string {
  if (!known) {
    return UNKNOWN_TYPE_COLOR;
  }
  const hue = fnv1a32(typeName) % 360;
  return `hsl(${hue}, 70%, 45%)`;
}

export function typeBackground(typeName: string, known = true): string {
  if (!known) {
    return "hsla(0, 0%, 62%, 0.35)";
  }
  const hue = fnv1a32(typeName) % 360;
  return `hsla(${hue}, 70%, 45%, 0.28)`;
}
