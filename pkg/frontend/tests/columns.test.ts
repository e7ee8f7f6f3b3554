import * as fs from 'node:fs';
import * as path from 'node:path';
import { fileURLToPath } from 'node:url';

import { describe, expect, test } from 'vitest';

import { exportFrames } from '../src/columns.js';
import { readEpisodeFile } from '../src/episode.js';

const here = path.dirname(fileURLToPath(import.meta.url));
const fixtures = path.resolve(here, '../fixtures');

/** Decode one 16-hex-char little-endian f64 field from a dump. */
function hexToF64(field: string): number {
  const view = new DataView(new ArrayBuffer(8));
  for (let i = 0; i < 8; i++) {
    view.setUint8(i, parseInt(field.slice(i * 2, i * 2 + 2), 16));
  }
  return view.getFloat64(0, true);
}

describe('exportFrames', () => {
  test('golden episode matches its TSV dump field for field', () => {
    const ep = readEpisodeFile(path.join(fixtures, 'golden', 'episode_3frame.aumi'));
    const cols = exportFrames(ep);
    const rows = fs
      .readFileSync(path.join(fixtures, 'golden', 'episode_3frame.tsv'), 'utf-8')
      .split('\n')
      .filter((line) => line.startsWith('frame\t'))
      .map((line) => line.split('\t'));

    expect(cols.rowCount).toBe(rows.length);
    rows.forEach((row, k) => {
      // frame, index, time, validity, 21 pose floats, 2 widths
      expect(row).toHaveLength(4 + 23);
      expect(Number(row[1])).toBe(k);
      expect(Number(row[2])).toBe(cols.timestamps[k]);
      expect(Number(row[3])).toBe(cols.validity[k]);
      const floats = row.slice(4).map(hexToF64);
      for (let i = 0; i < 7; i++) {
        expect(cols.leftTip[k * 7 + i]).toBe(floats[i]);
        expect(cols.rightTip[k * 7 + i]).toBe(floats[7 + i]);
        expect(cols.head[k * 7 + i]).toBe(floats[14 + i]);
      }
      expect(cols.leftWidth[k]).toBe(floats[21]);
      expect(cols.rightWidth[k]).toBe(floats[22]);
    });
  });

  test('row count equals frame count across the corpus', () => {
    const corpusDir = path.join(fixtures, 'corpus');
    for (const name of fs.readdirSync(corpusDir)) {
      if (!name.endsWith('.aumi')) {
        continue;
      }
      const ep = readEpisodeFile(path.join(corpusDir, name));
      const cols = exportFrames(ep);
      expect(cols.rowCount).toBe(ep.frames.length);
      expect(cols.timestamps).toHaveLength(ep.frames.length);
      expect(cols.leftTip).toHaveLength(ep.frames.length * 7);
      expect(cols.rightTip).toHaveLength(ep.frames.length * 7);
      expect(cols.head).toHaveLength(ep.frames.length * 7);
      expect(cols.leftWidth).toHaveLength(ep.frames.length);
      expect(cols.rightWidth).toHaveLength(ep.frames.length);
      expect(cols.validity).toHaveLength(ep.frames.length);
    }
  });

  test('zero-frame episode exports zero-length arrays', () => {
    const cols = exportFrames(readEpisodeFile(path.join(fixtures, 'zero_frame.aumi')));
    expect(cols.rowCount).toBe(0);
    expect(cols.timestamps).toEqual([]);
    expect(cols.leftTip).toHaveLength(0);
    expect(cols.validity).toHaveLength(0);
  });
});
