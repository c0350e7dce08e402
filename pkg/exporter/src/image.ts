/** Minimal portable-anymap decoder: binary PPM (P6) and PGM (P5). */

export class ImageDecodeError extends Error {}

export interface DecodedImage {
  width: number;
  height: number;
  /** RGB triplets in [0, 1], row-major */
  pixels: Float64Array;
}

export function decodePnm(buf: Buffer): DecodedImage {
  const magic = buf.toString('ascii', 0, 2);
  if (magic !== 'P6' && magic !== 'P5') {
    throw new ImageDecodeError(`unsupported image magic ${JSON.stringify(magic)}`);
  }
  // header: magic, width, height, maxval as whitespace-separated ASCII tokens,
  // with '#' comments allowed
  let off = 2;
  const tokens: number[] = [];
  while (tokens.length < 3) {
    if (off >= buf.length) throw new ImageDecodeError('truncated header');
    const c = String.fromCharCode(buf[off]);
    if (c === '#') {
      while (off < buf.length && buf[off] !== 0x0a) off++;
      off++;
    } else if (/\s/.test(c)) {
      off++;
    } else {
      let tok = '';
      while (off < buf.length && !/\s/.test(String.fromCharCode(buf[off]))) {
        tok += String.fromCharCode(buf[off]);
        off++;
      }
      const v = Number(tok);
      if (!Number.isInteger(v) || v <= 0) {
        throw new ImageDecodeError(`bad header token ${JSON.stringify(tok)}`);
      }
      tokens.push(v);
    }
  }
  off++; // single whitespace after maxval
  const [width, height, maxval] = tokens;
  if (maxval > 255) throw new ImageDecodeError('only 8-bit maxval supported');

  const channels = magic === 'P6' ? 3 : 1;
  const need = width * height * channels;
  if (buf.length - off < need) throw new ImageDecodeError('truncated pixel data');
  const pixels = new Float64Array(width * height * 3);
  for (let i = 0; i < width * height; i++) {
    if (channels === 3) {
      pixels[3 * i] = buf[off + 3 * i] / maxval;
      pixels[3 * i + 1] = buf[off + 3 * i + 1] / maxval;
      pixels[3 * i + 2] = buf[off + 3 * i + 2] / maxval;
    } else {
      const g = buf[off + i] / maxval;
      pixels[3 * i] = pixels[3 * i + 1] = pixels[3 * i + 2] = g;
    }
  }
  return { width, height, pixels };
}
