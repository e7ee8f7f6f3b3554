/**
 * Canonical TSV rendering for cross-implementation comparison.
 *
 * Every float is printed as its 8 little-endian IEEE-754 bytes in lowercase
 * hex, so two readers agree on a dump exactly when they agree on the bits;
 * no decimal formatting rules are involved. Integers print in decimal.
 */

import type { ReadEpisode } from './episode.js';

const scratch = new DataView(new ArrayBuffer(8));

function hexF64(value: number): string {
  scratch.setFloat64(0, value, true);
  let out = '';
  for (let i = 0; i < 8; i++) {
    out += scratch.getUint8(i).toString(16).padStart(2, '0');
  }
  return out;
}

/** Hex fields of an n-double array, straight from its backing bytes. */
function hexFields(values: Float64Array): string[] {
  const bytes = new Uint8Array(values.buffer, values.byteOffset, values.byteLength);
  const fields: string[] = [];
  for (let i = 0; i < values.length; i++) {
    let field = '';
    for (let j = 0; j < 8; j++) {
      field += bytes[i * 8 + j].toString(16).padStart(2, '0');
    }
    fields.push(field);
  }
  return fields;
}

export function dumpEpisode(ep: ReadEpisode): string {
  const h = ep.header;
  const lines = ['aumi-dump\t1'];
  lines.push(`meta\ttask_name\t${h.taskName}`);
  lines.push(`meta\toperator_id\t${h.operatorId}`);
  lines.push(`meta\tsource_kind\t${h.sourceKind}`);
  lines.push(`meta\tcreated_at\t${h.createdAt}`);
  lines.push(`meta\tcalibration_established_at\t${h.calibration.establishedAt}`);
  for (const [key, value] of h.extra) {
    lines.push(`meta\t${key}\t${value}`);
  }
  const cal = hexFields(h.calibration.worldFromTracking).join('\t');
  lines.push(`calibration\t${h.calibration.method}\t${cal}`);
  for (const e of h.extrinsics) {
    lines.push(`extrinsic\t${e.parent}\t${e.child}\t${hexFields(e.transform).join('\t')}`);
  }
  lines.push(`rate\t${hexF64(h.rate)}`);
  for (const f of ep.frames) {
    const fields = [
      ...hexFields(f.leftTip),
      ...hexFields(f.rightTip),
      ...hexFields(f.head),
      ...hexFields(f.widths),
    ];
    lines.push(`frame\t${f.index}\t${f.timelineTime}\t${f.validity}\t` + fields.join('\t'));
  }
  for (const [frameIdx, code] of ep.events) {
    lines.push(`event\t${frameIdx}\t${code}`);
  }
  return lines.join('\n') + '\n';
}
