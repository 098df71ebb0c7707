/** Equirectangular photosphere panner: pure view math, no drawing.
 *
 * A stitched panorama is a 2:1 longitude/latitude unwrap. The panner keeps
 * a center longitude and a zoom factor; the canvas layer asks for source
 * slices (at most two, because the view can straddle the +/-180 wrap seam)
 * and blits them side by side.
 */
export const MIN_ZOOM = 1;
export const MAX_ZOOM = 8;

export interface PanoImage {
  width: number;
  height: number;
}

export interface PanoView {
  /** Longitude at the viewport center, degrees in [-180, 180). */
  lonDeg: number;
  /** 1 shows the full 360 degrees; z shows 360/z degrees. */
  zoom: number;
}

/** Stitched panoramas are exactly twice as wide as tall. */
export function assertEquirect(width: number, height: number): void {
  if (
    !Number.isFinite(width) ||
    !Number.isFinite(height) ||
    width <= 0 ||
    height <= 0 ||
    width !== 2 * height
  ) {
    throw new Error(
      `need a 2:1 equirectangular image, got ${width}x${height}`,
    );
  }
}

/** View shown when a panorama loads: longitude 0 centered, no zoom. */
export function initialView(): PanoView {
  return { lonDeg: 0, zoom: MIN_ZOOM };
}

/** Wrap any longitude into [-180, 180). */
export function wrapLon(lonDeg: number): number {
  return ((((lonDeg + 180) % 360) + 360) % 360) - 180;
}

export function zoomTo(view: PanoView, zoom: number): PanoView {
  return {
    ...view,
    zoom: Math.max(MIN_ZOOM, Math.min(MAX_ZOOM, Number.isFinite(zoom) ? zoom : MIN_ZOOM)),
  };
}

/**
 * Drag by dxPx viewport pixels. Dragging right pulls the scene right, i.e.
 * the center longitude decreases, matching every map/pano viewer.
 */
export function pan(view: PanoView, dxPx: number, viewportWidthPx: number): PanoView {
  const degPerPx = 360 / view.zoom / viewportWidthPx;
  return { ...view, lonDeg: wrapLon(view.lonDeg - dxPx * degPerPx) };
}

/** Horizontal image column for a longitude (lon -180 -> 0, lon 0 -> mid). */
export function lonToColumn(lonDeg: number, imageWidth: number): number {
  return ((wrapLon(lonDeg) + 180) / 360) * imageWidth;
}

export interface Slice {
  srcX: number;
  srcWidth: number;
  /** Destination start as a fraction of the viewport width. */
  dstFrac: number;
  /** Destination width as a fraction of the viewport width. */
  dstWidthFrac: number;
}

/**
 * Source slices covering the current view, splitting at the wrap seam.
 * Slice destinations tile [0, 1) of the viewport in order.
 */
export function viewSlices(view: PanoView, image: PanoImage): Slice[] {
  assertEquirect(image.width, image.height);
  const viewCols = image.width / view.zoom;
  let start = lonToColumn(view.lonDeg, image.width) - viewCols / 2;
  start = ((start % image.width) + image.width) % image.width;
  const firstWidth = Math.min(viewCols, image.width - start);
  const slices: Slice[] = [
    { srcX: start, srcWidth: firstWidth, dstFrac: 0, dstWidthFrac: firstWidth / viewCols },
  ];
  if (firstWidth < viewCols) {
    slices.push({
      srcX: 0,
      srcWidth: viewCols - firstWidth,
      dstFrac: firstWidth / viewCols,
      dstWidthFrac: (viewCols - firstWidth) / viewCols,
    });
  }
  return slices;
}
