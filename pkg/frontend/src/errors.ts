/** Error taxonomy of the episode reader. One class per failure mode. */

export class EpisodeError extends Error {
  constructor(message: string) {
    super(message);
    this.name = new.target.name;
  }
}

/** First bytes disagree with the "AUMI" magic. */
export class BadMagic extends EpisodeError {}

/** Well-framed file written by a format version this reader does not know. */
export class UnsupportedVersion extends EpisodeError {}

/** Stored trailing CRC-32 does not match the body. */
export class CrcMismatch extends EpisodeError {}

/** File ends inside a structure, or carries bytes no structure claims. */
export class TruncatedFile extends EpisodeError {}
