/**
 * EMB1 binary container: named float32 vectors of a common dimension.
 *
 * Layout (all little-endian):
 *   bytes 0-3  ASCII "EMB1"
 *   u32        version (1)
 *   u32        dimension
 *   u64        record count
 *   ids block  count x (u16 byte length + UTF-8 bytes)
 *   data block count x dim float32, row-major
 */

export const MAGIC = 'EMB1';
export const VERSION = 1;

export interface EmbeddingMatrix {
  ids: string[];
  dim: number;
  /** row-major, ids.length * dim entries */
  data: Float32Array;
}

export class Emb1FormatError extends Error {}

export function encodeEmb1(m: EmbeddingMatrix): Buffer {
  if (m.data.length !== m.ids.length * m.dim) {
    throw new Emb1FormatError(
      `data length ${m.data.length} does not match ${m.ids.length} x ${m.dim}`,
    );
  }
  if (new Set(m.ids).size !== m.ids.length) {
    throw new Emb1FormatError('duplicate ids');
  }
  for (const v of m.data) {
    if (!Number.isFinite(v)) throw new Emb1FormatError('non-finite value in data');
  }
  const idBufs = m.ids.map((id) => {
    const raw = Buffer.from(id, 'utf-8');
    const len = Buffer.alloc(2);
    len.writeUInt16LE(raw.length);
    return Buffer.concat([len, raw]);
  });
  const header = Buffer.alloc(20);
  header.write(MAGIC, 0, 'ascii');
  header.writeUInt32LE(VERSION, 4);
  header.writeUInt32LE(m.dim, 8);
  header.writeBigUInt64LE(BigInt(m.ids.length), 12);
  const data = Buffer.alloc(m.data.length * 4);
  for (let i = 0; i < m.data.length; i++) data.writeFloatLE(m.data[i], i * 4);
  return Buffer.concat([header, ...idBufs, data]);
}

export function decodeEmb1(buf: Buffer): EmbeddingMatrix {
  if (buf.length < 20) throw new Emb1FormatError('file shorter than header');
  if (buf.toString('ascii', 0, 4) !== MAGIC) throw new Emb1FormatError('bad magic');
  const version = buf.readUInt32LE(4);
  if (version !== VERSION) throw new Emb1FormatError(`unsupported version ${version}`);
  const dim = buf.readUInt32LE(8);
  const count = Number(buf.readBigUInt64LE(12));
  let off = 20;
  const ids: string[] = [];
  for (let i = 0; i < count; i++) {
    if (off + 2 > buf.length) throw new Emb1FormatError('truncated ids block');
    const n = buf.readUInt16LE(off);
    off += 2;
    if (off + n > buf.length) throw new Emb1FormatError('truncated id payload');
    ids.push(buf.toString('utf-8', off, off + n));
    off += n;
  }
  if (new Set(ids).size !== ids.length) throw new Emb1FormatError('duplicate ids');
  const need = count * dim * 4;
  if (buf.length - off < need) throw new Emb1FormatError('truncated data block');
  const data = new Float32Array(count * dim);
  for (let i = 0; i < data.length; i++) {
    const v = buf.readFloatLE(off + i * 4);
    if (!Number.isFinite(v)) throw new Emb1FormatError('non-finite value in data');
    data[i] = v;
  }
  return { ids, dim, data };
}
