/**
 * Mix-manifest reader. The manifest is TSV with `#` header comments:
 *
 *   # aumi mix manifest
 *   # ratio_requested = 0.01
 *   # seed = 42
 *   ...
 *   activeumi<TAB>path<TAB>frame_count<TAB>crc32_hex
 */

import * as fs from 'node:fs';

export interface ManifestEntry {
  sourceKind: 'activeumi' | 'teleop';
  path: string;
  frameCount: number;
  /** The episode file's trailing CRC-32 (the CRC of the body). */
  checksum: number;
}

export interface Manifest {
  entries: ManifestEntry[];
  ratioRequested: number;
  seed: number;
  notes: string[];
}

export function parseManifest(text: string): Manifest {
  const manifest: Manifest = { entries: [], ratioRequested: 0, seed: 0, notes: [] };
  const lines = text.split('\n');
  for (let i = 0; i < lines.length; i++) {
    const line = lines[i];
    if (line.trim() === '') {
      continue;
    }
    if (line.startsWith('#')) {
      const body = line.slice(1).trim();
      if (body.startsWith('ratio_requested')) {
        manifest.ratioRequested = Number(body.split('=', 2)[1]);
      } else if (body.startsWith('seed')) {
        manifest.seed = Number(body.split('=', 2)[1]);
      } else if (body.startsWith('note:')) {
        manifest.notes.push(body.slice('note:'.length).trim());
      }
      continue;
    }
    const parts = line.split('\t');
    if (parts.length !== 4) {
      throw new Error(`manifest line ${i + 1}: expected 4 tab-separated fields`);
    }
    const [kind, path, count, crc] = parts;
    if (kind !== 'activeumi' && kind !== 'teleop') {
      throw new Error(`manifest line ${i + 1}: unknown source kind ${JSON.stringify(kind)}`);
    }
    if (!/^\d+$/.test(count)) {
      throw new Error(`manifest line ${i + 1}: bad frame count ${JSON.stringify(count)}`);
    }
    if (!/^[0-9a-fA-F]{1,8}$/.test(crc)) {
      throw new Error(`manifest line ${i + 1}: bad checksum ${JSON.stringify(crc)}`);
    }
    manifest.entries.push({
      sourceKind: kind,
      path,
      frameCount: Number(count),
      checksum: parseInt(crc, 16),
    });
  }
  return manifest;
}

export function readManifestFile(path: string): Manifest {
  return parseManifest(fs.readFileSync(path, 'utf-8'));
}
