/**
 * Episode file reader.
 *
 * Layout (all little-endian): magic "AUMI", version u16, metadata block
 * (u32 length + UTF-8 key=value lines), calibration pose 7xf64 + method u8,
 * extrinsic count u8 + {parent u8, child u8, pose 7xf64} records, rate f64,
 * frame count u64, fixed 202-byte frame records, event section (count u32 +
 * {frame u64, code u8}), CRC-32 over everything before it.
 *
 * Read order is magic, structural minimum, version, CRC, then the walk, so
 * corruption anywhere past the 6-byte prologue is reported as CrcMismatch
 * and a short or overlong body as TruncatedFile. Reading is total: any
 * byte string either parses or raises one of the four typed errors.
 *
 * This package only reads. Writing stays in the producing pipeline so the
 * format has exactly one producer.
 */

import * as fs from 'node:fs';

import { crc32 } from './crc32.js';
import { BadMagic, CrcMismatch, TruncatedFile, UnsupportedVersion } from './errors.js';
import { BinaryReader } from './reader.js';

export const MAGIC = 'AUMI';
export const FORMAT_VERSION = 1;

/** Pose as wire-order floats: tx, ty, tz, qw, qx, qy, qz. */
export type PoseFields = Float64Array;

export enum CalibrationMethod {
  ZERO_POINT_RESET = 1,
  DOCK = 2,
}

/** Coordinate frame ids used in extrinsic records. */
export const FRAME_ID_MIN = 0;
export const FRAME_ID_MAX = 10;

export type SourceKind = 'activeumi' | 'teleop';

export interface CalibrationState {
  worldFromTracking: PoseFields;
  method: CalibrationMethod;
  establishedAt: number;
}

export interface Extrinsic {
  parent: number;
  child: number;
  transform: PoseFields;
}

export interface EpisodeHeader {
  taskName: string;
  operatorId: string;
  sourceKind: SourceKind;
  rate: number;
  calibration: CalibrationState;
  extrinsics: Extrinsic[];
  createdAt: number;
  formatVersion: number;
  /** Non-standard metadata, sorted by key. */
  extra: [string, string][];
}

export interface SyncedFrame {
  index: number;
  timelineTime: number;
  validity: number;
  leftTip: PoseFields;
  rightTip: PoseFields;
  head: PoseFields;
  /** Both gripper widths as a bit-exact copy of the file bytes. */
  widths: Float64Array;
  leftWidth: number;
  rightWidth: number;
  events: number[];
}

export interface ReadEpisode {
  header: EpisodeHeader;
  frames: SyncedFrame[];
  /** (frame index, code) pairs in file order; the authoritative list. */
  events: [number, number][];
}

const FIXED_HEAD_SIZE = 10;
const CRC_SIZE = 4;
// fixed head + calibration + extrinsic count + rate/frame-count + event count + crc
const MIN_FILE_SIZE = FIXED_HEAD_SIZE + 57 + 1 + 16 + CRC_SIZE + CRC_SIZE;

const STANDARD_KEYS = new Set([
  'task_name',
  'operator_id',
  'source_kind',
  'created_at',
  'calibration_established_at',
]);

function parseMetadata(raw: Uint8Array): Map<string, string> {
  let text: string;
  try {
    text = new TextDecoder('utf-8', { fatal: true }).decode(raw);
  } catch (exc) {
    throw new TruncatedFile(`metadata is not UTF-8: ${exc}`);
  }
  const meta = new Map<string, string>();
  if (text.length === 0) {
    return meta;
  }
  for (const line of text.split('\n')) {
    const eq = line.indexOf('=');
    if (eq < 0) {
      throw new TruncatedFile(`metadata line without '=': ${JSON.stringify(line)}`);
    }
    meta.set(line.slice(0, eq), line.slice(eq + 1));
  }
  return meta;
}

function metaInt(meta: Map<string, string>, key: string): number {
  const raw = meta.get(key) ?? '0';
  if (!/^[+-]?\d+$/.test(raw)) {
    throw new TruncatedFile(`metadata ${key}=${JSON.stringify(raw)} is not an integer`);
  }
  const value = Number(raw);
  if (!Number.isSafeInteger(value)) {
    throw new TruncatedFile(`metadata ${key}=${raw} overflows the safe integer range`);
  }
  return value;
}

export function parseEpisode(data: Uint8Array): ReadEpisode {
  const prefix = new TextDecoder('latin1').decode(data.slice(0, 4));
  if (prefix !== MAGIC.slice(0, prefix.length)) {
    throw new BadMagic(`expected "${MAGIC}", got ${JSON.stringify(prefix)}`);
  }
  if (data.length < MIN_FILE_SIZE) {
    throw new TruncatedFile(
      `${data.length} bytes is below the ${MIN_FILE_SIZE}-byte structural minimum`,
    );
  }

  const head = new DataView(data.buffer, data.byteOffset, data.byteLength);
  const version = head.getUint16(4, true);
  if (version !== FORMAT_VERSION) {
    throw new UnsupportedVersion(`format version ${version}, reader supports ${FORMAT_VERSION}`);
  }

  const storedCrc = head.getUint32(data.length - CRC_SIZE, true);
  const actualCrc = crc32(data.subarray(0, data.length - CRC_SIZE));
  if (storedCrc !== actualCrc) {
    throw new CrcMismatch(
      `stored crc ${storedCrc.toString(16).padStart(8, '0')}, ` +
      `computed ${actualCrc.toString(16).padStart(8, '0')}`,
    );
  }

  const r = new BinaryReader(data, data.length - CRC_SIZE);
  r.skip(4, 'magic');
  r.skip(2, 'version');
  const metaLen = r.readUint32('metadata length');
  const meta = parseMetadata(r.readBytes(metaLen, 'metadata'));

  const worldFromTracking = r.readFloat64Array(7, 'calibration');
  const methodByte = r.readUint8('calibration');
  if (methodByte !== CalibrationMethod.ZERO_POINT_RESET && methodByte !== CalibrationMethod.DOCK) {
    throw new TruncatedFile(`unknown calibration method ${methodByte}`);
  }
  const calibration: CalibrationState = {
    worldFromTracking,
    method: methodByte,
    establishedAt: metaInt(meta, 'calibration_established_at'),
  };

  const extCount = r.readUint8('extrinsic count');
  const extrinsics: Extrinsic[] = [];
  for (let i = 0; i < extCount; i++) {
    const parent = r.readUint8('extrinsic record');
    const child = r.readUint8('extrinsic record');
    if (parent > FRAME_ID_MAX || child > FRAME_ID_MAX) {
      throw new TruncatedFile(`unknown frame id in extrinsic: ${parent},${child}`);
    }
    extrinsics.push({ parent, child, transform: r.readFloat64Array(7, 'extrinsic record') });
  }

  const rate = r.readFloat64('rate and frame count');
  const frameCount = r.readUint64('rate and frame count');

  interface RawFrame {
    timelineTime: number;
    validity: number;
    leftTip: PoseFields;
    rightTip: PoseFields;
    head: PoseFields;
    widths: Float64Array;
  }
  const rawFrames: RawFrame[] = [];
  for (let k = 0; k < frameCount; k++) {
    const timelineTime = r.readUint64('frame record');
    const validity = r.readUint8('frame record');
    r.skip(7, 'frame record'); // alignment padding
    rawFrames.push({
      timelineTime,
      validity,
      leftTip: r.readFloat64Array(7, 'frame record'),
      rightTip: r.readFloat64Array(7, 'frame record'),
      head: r.readFloat64Array(7, 'frame record'),
      widths: r.readFloat64Array(2, 'frame record'),
    });
    r.skip(2, 'frame record'); // per-frame event count; trailing section is authoritative
  }

  const eventCount = r.readUint32('event count');
  const events: [number, number][] = [];
  for (let i = 0; i < eventCount; i++) {
    const frameIdx = r.readUint64('event record');
    const code = r.readUint8('event record');
    events.push([frameIdx, code]);
  }

  if (r.remaining !== 0) {
    throw new TruncatedFile(`${r.remaining} bytes of trailing data before the checksum`);
  }

  const perFrame: number[][] = Array.from({ length: rawFrames.length }, () => []);
  for (const [frameIdx, code] of events) {
    if (frameIdx >= 0 && frameIdx < rawFrames.length) {
      perFrame[frameIdx].push(code);
    }
  }

  const frames: SyncedFrame[] = rawFrames.map((f, k) => ({
    index: k,
    timelineTime: f.timelineTime,
    validity: f.validity,
    leftTip: f.leftTip,
    rightTip: f.rightTip,
    head: f.head,
    widths: f.widths,
    leftWidth: f.widths[0],
    rightWidth: f.widths[1],
    events: perFrame[k],
  }));

  const kindRaw = meta.get('source_kind') ?? '';
  if (kindRaw !== 'activeumi' && kindRaw !== 'teleop') {
    throw new TruncatedFile(`unknown source kind ${JSON.stringify(kindRaw)}`);
  }

  const extra: [string, string][] = [...meta.entries()]
    .filter(([key]) => !STANDARD_KEYS.has(key))
    .sort((a, b) => (a[0] < b[0] ? -1 : a[0] > b[0] ? 1 : 0));

  const header: EpisodeHeader = {
    taskName: meta.get('task_name') ?? '',
    operatorId: meta.get('operator_id') ?? '',
    sourceKind: kindRaw,
    rate,
    calibration,
    extrinsics,
    createdAt: metaInt(meta, 'created_at'),
    formatVersion: version,
    extra,
  };

  return { header, frames, events };
}

export function readEpisodeFile(path: string): ReadEpisode {
  return parseEpisode(fs.readFileSync(path));
}
