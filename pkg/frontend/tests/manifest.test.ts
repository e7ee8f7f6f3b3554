import * as fs from 'node:fs';
import * as path from 'node:path';
import { fileURLToPath } from 'node:url';

import { describe, expect, test } from 'vitest';

import { parseManifest, readManifestFile } from '../src/manifest.js';
import { crc32 } from '../src/crc32.js';

const here = path.dirname(fileURLToPath(import.meta.url));
const fixtures = path.resolve(here, '../fixtures');

describe('mix manifest', () => {
  test('fixture manifest matches the producer entry for entry', () => {
    const manifest = readManifestFile(path.join(fixtures, 'mix.manifest'));
    const want = JSON.parse(fs.readFileSync(path.join(fixtures, 'mix.expected.json'), 'utf-8'));

    expect(manifest.ratioRequested).toBe(want.ratio_requested);
    expect(manifest.seed).toBe(want.seed);
    expect(manifest.notes).toEqual(want.notes);
    expect(manifest.entries).toHaveLength(want.entries.length);
    manifest.entries.forEach((entry, i) => {
      expect(entry.sourceKind).toBe(want.entries[i].source_kind);
      expect(entry.path).toBe(want.entries[i].path);
      expect(entry.frameCount).toBe(want.entries[i].frame_count);
      expect(entry.checksum).toBe(want.entries[i].checksum);
    });
  });

  test('checksums are the stored trailing CRC of each episode file', () => {
    const manifest = readManifestFile(path.join(fixtures, 'mix.manifest'));
    for (const entry of manifest.entries.slice(0, 10)) {
      const data = fs.readFileSync(path.join(fixtures, entry.path));
      const body = data.subarray(0, data.length - 4);
      const stored = new DataView(data.buffer, data.byteOffset + data.length - 4, 4)
        .getUint32(0, true);
      expect(entry.checksum).toBe(crc32(body));
      expect(entry.checksum).toBe(stored);
    }
  });

  test('rejects malformed rows', () => {
    expect(() => parseManifest('activeumi\tonly\tthree')).toThrow(/4 tab-separated/);
    expect(() => parseManifest('robot\ta.aumi\t5\tdeadbeef')).toThrow(/unknown source kind/);
    expect(() => parseManifest('teleop\ta.aumi\tfive\tdeadbeef')).toThrow(/bad frame count/);
    expect(() => parseManifest('teleop\ta.aumi\t5\tqq')).toThrow(/bad checksum/);
  });

  test('comments and blank lines are skipped, notes collected', () => {
    const text = [
      '# aumi mix manifest',
      '# ratio_requested = 0.5',
      '# seed = 9',
      '# note: pool smaller than request; drew with replacement',
      '',
      'teleop\tdata/x.aumi\t61\t0000abcd',
      '',
    ].join('\n');
    const manifest = parseManifest(text);
    expect(manifest.ratioRequested).toBe(0.5);
    expect(manifest.seed).toBe(9);
    expect(manifest.notes).toEqual(['pool smaller than request; drew with replacement']);
    expect(manifest.entries).toEqual([
      { sourceKind: 'teleop', path: 'data/x.aumi', frameCount: 61, checksum: 0xabcd },
    ]);
  });
});

describe('crc32', () => {
  test('reference vectors', () => {
    expect(crc32(new Uint8Array(0))).toBe(0);
    expect(crc32(new TextEncoder().encode('123456789'))).toBe(0xcbf43926);
  });

  test('whole-file residue: body crc appended gives the CRC-32 constant', () => {
    const data = fs.readFileSync(path.join(fixtures, 'golden', 'episode_3frame.aumi'));
    expect(crc32(data)).toBe(0x2144df1c);
  });
});
