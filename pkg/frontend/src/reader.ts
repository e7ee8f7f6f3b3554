import { TruncatedFile } from './errors.js';

/**
 * Cursor over a little-endian byte buffer. Every read is bounds-checked
 * against a limit (the byte before the trailing CRC), so running off the
 * end of a structure surfaces as TruncatedFile, never a RangeError.
 */
export class BinaryReader {
  private readonly view: DataView;
  private readonly bytes: Uint8Array;
  private pos: number;
  private readonly limit: number;

  constructor(bytes: Uint8Array, limit?: number) {
    this.bytes = bytes;
    this.view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
    this.pos = 0;
    this.limit = limit ?? bytes.byteLength;
  }

  get position(): number {
    return this.pos;
  }

  get remaining(): number {
    return this.limit - this.pos;
  }

  private need(n: number, what: string): number {
    if (this.pos + n > this.limit) {
      throw new TruncatedFile(`file ends inside ${what}`);
    }
    const at = this.pos;
    this.pos += n;
    return at;
  }

  readUint8(what: string): number {
    return this.view.getUint8(this.need(1, what));
  }

  readUint16(what: string): number {
    return this.view.getUint16(this.need(2, what), true);
  }

  readUint32(what: string): number {
    return this.view.getUint32(this.need(4, what), true);
  }

  /** u64 as a plain number; episode counters and timestamps fit in 2^53. */
  readUint64(what: string): number {
    const value = this.view.getBigUint64(this.need(8, what), true);
    if (value > BigInt(Number.MAX_SAFE_INTEGER)) {
      throw new TruncatedFile(`${what} ${value} overflows the safe integer range`);
    }
    return Number(value);
  }

  readFloat64(what: string): number {
    return this.view.getFloat64(this.need(8, what), true);
  }

  /**
   * n doubles as a bit-exact copy of the underlying bytes. Building the
   * array from raw bytes (not element-by-element reads) keeps unusual bit
   * patterns intact for the hex dump. Copied into a fresh buffer: Buffer
   * overrides slice() to alias its pool, so an explicit set() is the only
   * portable way to get owned bytes.
   */
  readFloat64Array(n: number, what: string): Float64Array {
    const at = this.need(n * 8, what);
    const copy = new Uint8Array(n * 8);
    copy.set(this.bytes.subarray(at, at + n * 8));
    return new Float64Array(copy.buffer);
  }

  readBytes(n: number, what: string): Uint8Array {
    const at = this.need(n, what);
    const copy = new Uint8Array(n);
    copy.set(this.bytes.subarray(at, at + n));
    return copy;
  }

  skip(n: number, what: string): void {
    this.need(n, what);
  }
}
