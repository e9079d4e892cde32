#pragma once

#include <filesystem>
#include <vector>

#include <torch/torch.h>

#include "advface/face_tensor.hpp"
#include "advface/metrics.hpp"

namespace advface {

/// Decodes an 8- or 16-bit RGB(A)/grey image into a face in [0,1].
/// Throws InputError if the file cannot be decoded.
FaceTensor read_face(const std::filesystem::path& path);

/// Centre-crops to a square and resizes (area interpolation) to resolution x resolution.
/// Faces already at that size are returned unchanged.
FaceTensor center_resize(const FaceTensor& face, int resolution);

/// Lossless PNG with 8 or 16 bits per channel. Byte output depends only on the pixels.
void write_face_png(const std::filesystem::path& path, const FaceTensor& face, int bit_depth = 8);

/// Writes a protected face so that the decoded file still lies within `epsilon` of
/// `original` (per pixel, tolerance 1e-6) and in [0,1]: each value is rounded to the
/// nearest code that keeps the bound. Falls back to 16 bits when 8 bits cannot hold it.
/// Returns the bit depth used; throws NumericError if the bound cannot be met.
int write_protected_png(const std::filesystem::path& path, const FaceTensor& protected_face,
                        const FaceTensor& original, double epsilon, int bit_depth = 8);

/// Grey mask image (8/16 bit) normalised to [0,1].
DetectionMask read_mask(const std::filesystem::path& path);
void write_mask_png(const std::filesystem::path& path, const DetectionMask& mask);

/// 8-bit single-channel PNG from an r x c tensor already in 0..255.
void write_grey_png(const std::filesystem::path& path, const torch::Tensor& values);

/// Image files (png, jpg, jpeg, bmp, tif, tiff) in a directory, sorted by filename.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

}  // namespace advface
