// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include "affc/augmentation.hpp"
#include "affc/image.hpp"

namespace affc {

/// Clean image together with the digest that names it in the cache.
class SourceImage {
 public:
  explicit SourceImage(ImageBuffer image);

  const ImageBuffer& image() const noexcept { return *image_; }
  std::shared_ptr<const ImageBuffer> shared() const noexcept { return image_; }
  /// SHA-256 over the dimensions and raw samples.
  const std::string& sha256() const noexcept { return sha256_; }

 private:
  std::shared_ptr<const ImageBuffer> image_;
  std::string sha256_;
};

/// SHA-256 of "<w>x<h>\n" followed by the raw RGB samples.
std::string raster_sha256(const ImageBuffer& image);

struct CacheKey {
  std::string image_sha256;
  OperatorKind op = OperatorKind::fog;
  int strength_millis = 0;  // 0..1000
  AugmentationSeed seed;

  /// Throws CacheError unless `strength` is an exact multiple of 0.001.
  static CacheKey make(std::string image_sha256, OperatorKind op,
                       Strength strength, AugmentationSeed seed);
  Strength strength() const { return Strength(strength_millis / 1000.0); }
};

/// Hash-addressed store of augmented images:
///   <root>/<sha256>/<operator>/<millis:04>_<seed:016x>.png
/// Files are written to a temp name and renamed into place, so concurrent
/// generators of one key converge on a single complete file.
class AugmentCache {
 public:
  explicit AugmentCache(std::filesystem::path root);

  const std::filesystem::path& root() const noexcept { return root_; }
  std::filesystem::path path_for(const CacheKey& key) const;

  /// Returns the cached file, generating it first on a miss.
  /// Throws IntegrityError if source digest != key digest, CacheError on
  /// storage failure.
  std::filesystem::path get_or_generate(const CacheKey& key,
                                        const SourceImage& source);

  /// Files written by this instance.
  std::size_t generated() const noexcept { return generated_.load(); }

 private:
  std::filesystem::path root_;
  std::atomic<std::size_t> generated_{0};
};

/// Regular files below `root` with a .png extension.
std::size_t count_cache_files(const std::filesystem::path& root);

}  // namespace affc
