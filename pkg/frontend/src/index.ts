export {
  CalibrationMethod,
  FORMAT_VERSION,
  MAGIC,
  parseEpisode,
  readEpisodeFile,
} from './episode.js';
export type {
  CalibrationState,
  EpisodeHeader,
  Extrinsic,
  PoseFields,
  ReadEpisode,
  SourceKind,
  SyncedFrame,
} from './episode.js';
export { BadMagic, CrcMismatch, EpisodeError, TruncatedFile, UnsupportedVersion } from './errors.js';
export { dumpEpisode } from './dump.js';
export { exportFrames } from './columns.js';
export type { FrameColumns } from './columns.js';
export { parseManifest, readManifestFile } from './manifest.js';
export type { Manifest, ManifestEntry } from './manifest.js';
export { crc32 } from './crc32.js';
