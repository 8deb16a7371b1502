// Minimal PNG writer. Emits bit-depth-8 images with no compression: the
// zlib stream uses stored deflate blocks, so the server (or any inflater)
// recovers the scanlines byte-for-byte. Good enough for label layers and
// small working images; never used for display.

const SIGNATURE = new Uint8Array([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]);
const STORED_BLOCK_MAX = 0xffff;

const CRC_TABLE = (() => {
  const table = new Uint32Array(256);
  for (let n = 0; n < 256; n++) {
    let c = n;
    for (let k = 0; k < 8; k++) {
      c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
    }
    table[n] = c >>> 0;
  }
  return table;
})();

export function crc32(bytes: Uint8Array): number {
  let c = 0xffffffff;
  for (let i = 0; i < bytes.length; i++) {
    c = CRC_TABLE[(c ^ bytes[i]!) & 0xff]! ^ (c >>> 8);
  }
  return (c ^ 0xffffffff) >>> 0;
}

function adler32(bytes: Uint8Array): number {
  // RFC 1950; mod every 5552 bytes keeps the sums inside 32 bits.
  let a = 1;
  let b = 0;
  let i = 0;
  while (i < bytes.length) {
    const end = Math.min(i + 5552, bytes.length);
    for (; i < end; i++) {
      a += bytes[i]!;
      b += a;
    }
    a %= 65521;
    b %= 65521;
  }
  return ((b << 16) | a) >>> 0;
}

function chunk(type: string, data: Uint8Array): Uint8Array {
  const out = new Uint8Array(12 + data.length);
  const view = new DataView(out.buffer);
  view.setUint32(0, data.length);
  for (let i = 0; i < 4; i++) out[4 + i] = type.charCodeAt(i);
  out.set(data, 8);
  view.setUint32(8 + data.length, crc32(out.subarray(4, 8 + data.length)));
  return out;
}

function zlibStored(raw: Uint8Array): Uint8Array {
  const nBlocks = Math.max(1, Math.ceil(raw.length / STORED_BLOCK_MAX));
  const out = new Uint8Array(2 + raw.length + 5 * nBlocks + 4);
  out[0] = 0x78; // 32k window, deflate
  out[1] = 0x01; // no dict, check bits valid
  let pos = 2;
  for (let off = 0; off < nBlocks * STORED_BLOCK_MAX; off += STORED_BLOCK_MAX) {
    const len = Math.min(STORED_BLOCK_MAX, raw.length - off);
    const final = off + len >= raw.length;
    out[pos++] = final ? 1 : 0; // BFINAL, BTYPE=00 (stored)
    out[pos++] = len & 0xff;
    out[pos++] = len >>> 8;
    out[pos++] = ~len & 0xff;
    out[pos++] = (~len >>> 8) & 0xff;
    out.set(raw.subarray(off, off + len), pos);
    pos += len;
    if (final) break;
  }
  const view = new DataView(out.buffer);
  view.setUint32(pos, adler32(raw));
  return out.subarray(0, pos + 4);
}

function encode(width: number, height: number, pixels: Uint8Array, channels: 1 | 3): Uint8Array {
  if (width < 1 || height < 1) throw new Error("png: empty image");
  if (pixels.length !== width * height * channels) {
    throw new Error(`png: expected ${width * height * channels} bytes, got ${pixels.length}`);
  }
  const ihdr = new Uint8Array(13);
  const view = new DataView(ihdr.buffer);
  view.setUint32(0, width);
  view.setUint32(4, height);
  ihdr[8] = 8; // bit depth
  ihdr[9] = channels === 1 ? 0 : 2; // greyscale / truecolour
  // compression, filter, interlace stay 0

  const stride = width * channels;
  const raw = new Uint8Array((stride + 1) * height);
  for (let y = 0; y < height; y++) {
    // filter byte 0 (None) per scanline; raw bytes follow untouched
    raw.set(pixels.subarray(y * stride, (y + 1) * stride), y * (stride + 1) + 1);
  }

  const parts = [SIGNATURE, chunk("IHDR", ihdr), chunk("IDAT", zlibStored(raw)), chunk("IEND", new Uint8Array(0))];
  const total = parts.reduce((n, p) => n + p.length, 0);
  const out = new Uint8Array(total);
  let pos = 0;
  for (const p of parts) {
    out.set(p, pos);
    pos += p.length;
  }
  return out;
}

export function encodeGrayPng(width: number, height: number, pixels: Uint8Array): Uint8Array {
  return encode(width, height, pixels, 1);
}

export function encodeRgbPng(width: number, height: number, pixels: Uint8Array): Uint8Array {
  return encode(width, height, pixels, 3);
}

export interface PngSize {
  width: number;
  height: number;
}

/** Read dimensions from the IHDR without decoding pixel data. */
export function readPngSize(bytes: Uint8Array): PngSize {
  if (bytes.length < 24) throw new Error("not a PNG: too short");
  for (let i = 0; i < SIGNATURE.length; i++) {
    if (bytes[i] !== SIGNATURE[i]) throw new Error("not a PNG: bad signature");
  }
  const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  return { width: view.getUint32(16), height: view.getUint32(20) };
}
