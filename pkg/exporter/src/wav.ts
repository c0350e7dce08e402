/** Minimal RIFF/WAVE decoder: PCM16 or float32, mono or stereo. */

export class AudioDecodeError extends Error {}

export interface DecodedAudio {
  samples: Float64Array; // mono, [-1, 1]
  sampleRate: number;
}

export function decodeWav(buf: Buffer): DecodedAudio {
  if (buf.length < 12 || buf.toString('ascii', 0, 4) !== 'RIFF' ||
      buf.toString('ascii', 8, 12) !== 'WAVE') {
    throw new AudioDecodeError('not a RIFF/WAVE file');
  }
  let fmt: { codec: number; channels: number; rate: number; bits: number } | null = null;
  let data: Buffer | null = null;
  let off = 12;
  while (off + 8 <= buf.length) {
    const id = buf.toString('ascii', off, off + 4);
    const size = buf.readUInt32LE(off + 4);
    const body = buf.subarray(off + 8, off + 8 + size);
    if (id === 'fmt ') {
      if (body.length < 16) throw new AudioDecodeError('short fmt chunk');
      fmt = {
        codec: body.readUInt16LE(0),
        channels: body.readUInt16LE(2),
        rate: body.readUInt32LE(4),
        bits: body.readUInt16LE(14),
      };
    } else if (id === 'data') {
      if (body.length < size) throw new AudioDecodeError('truncated data chunk');
      data = body;
    }
    off += 8 + size + (size % 2);
  }
  if (!fmt || !data) throw new AudioDecodeError('missing fmt or data chunk');
  if (fmt.channels < 1 || fmt.channels > 2) {
    throw new AudioDecodeError(`${fmt.channels} channels unsupported`);
  }

  let raw: Float64Array;
  if (fmt.codec === 1 && fmt.bits === 16) {
    const n = Math.floor(data.length / 2);
    raw = new Float64Array(n);
    for (let i = 0; i < n; i++) raw[i] = data.readInt16LE(i * 2) / 32768;
  } else if (fmt.codec === 3 && fmt.bits === 32) {
    const n = Math.floor(data.length / 4);
    raw = new Float64Array(n);
    for (let i = 0; i < n; i++) raw[i] = data.readFloatLE(i * 4);
  } else {
    throw new AudioDecodeError(`codec ${fmt.codec} / ${fmt.bits}-bit unsupported`);
  }

  if (fmt.channels === 2) {
    const n = Math.floor(raw.length / 2);
    const mono = new Float64Array(n);
    for (let i = 0; i < n; i++) mono[i] = (raw[2 * i] + raw[2 * i + 1]) / 2;
    raw = mono;
  }
  if (raw.length === 0) throw new AudioDecodeError('empty audio payload');
  return { samples: raw, sampleRate: fmt.rate };
}
