/**
 * Columnar projection for training pipelines: one array per channel,
 * row count equal to the frame count. Pose channels are row-major
 * n x 7 (tx, ty, tz, qw, qx, qy, qz per row).
 */

import type { ReadEpisode } from './episode.js';

export interface FrameColumns {
  rowCount: number;
  /** Frame timestamps in microseconds. */
  timestamps: number[];
  leftTip: Float64Array;
  rightTip: Float64Array;
  head: Float64Array;
  leftWidth: Float64Array;
  rightWidth: Float64Array;
  validity: Uint8Array;
}

export function exportFrames(ep: ReadEpisode): FrameColumns {
  const n = ep.frames.length;
  const cols: FrameColumns = {
    rowCount: n,
    timestamps: new Array<number>(n),
    leftTip: new Float64Array(n * 7),
    rightTip: new Float64Array(n * 7),
    head: new Float64Array(n * 7),
    leftWidth: new Float64Array(n),
    rightWidth: new Float64Array(n),
    validity: new Uint8Array(n),
  };
  for (let k = 0; k < n; k++) {
    const f = ep.frames[k];
    cols.timestamps[k] = f.timelineTime;
    cols.leftTip.set(f.leftTip, k * 7);
    cols.rightTip.set(f.rightTip, k * 7);
    cols.head.set(f.head, k * 7);
    cols.leftWidth[k] = f.leftWidth;
    cols.rightWidth[k] = f.rightWidth;
    cols.validity[k] = f.validity;
  }
  return cols;
}
