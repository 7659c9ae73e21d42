// SPDX-License-Identifier: Apache-2.0
#include "affc/cache.hpp"

#include <unistd.h>

#include <cstdio>
#include <fstream>
#include <system_error>

#include "affc/codec.hpp"
#include "affc/errors.hpp"

namespace affc {

namespace fs = std::filesystem;

std::string raster_sha256(const ImageBuffer& image) {
  const std::string header =
      std::to_string(image.width()) + "x" + std::to_string(image.height()) + "\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  bytes.insert(bytes.end(), image.data().begin(), image.data().end());
  return sha256_hex(bytes);
}

SourceImage::SourceImage(ImageBuffer image)
    : image_(std::make_shared<const ImageBuffer>(std::move(image))),
      sha256_(raster_sha256(*image_)) {}

CacheKey CacheKey::make(std::string image_sha256, OperatorKind op, Strength strength,
                        AugmentationSeed seed) {
  CacheKey key{std::move(image_sha256), op, strength.millis(), seed};
  if (key.strength() != strength) {
    throw CacheError("strength " + std::to_string(strength.value()) +
                     " is not a whole number of thousandths");
  }
  return key;
}

AugmentCache::AugmentCache(fs::path root) : root_(std::move(root)) {}

fs::path AugmentCache::path_for(const CacheKey& key) const {
  char name[64];
  std::snprintf(name, sizeof name, "%04d_%016llx.png", key.strength_millis,
                static_cast<unsigned long long>(key.seed.value));
  return root_ / key.image_sha256 / std::string(to_string(key.op)) / name;
}

fs::path AugmentCache::get_or_generate(const CacheKey& key, const SourceImage& source) {
  if (source.sha256() != key.image_sha256) {
    throw IntegrityError("cache key digest " + key.image_sha256 +
                         " does not match source image " + source.sha256());
  }
  const fs::path target = path_for(key);
  std::error_code ec;
  if (fs::is_regular_file(target, ec)) return target;

  fs::create_directories(target.parent_path(), ec);
  if (ec) throw CacheError("cannot create " + target.parent_path().string() + ": " + ec.message());

  const auto bytes = encode_png(apply(key.op, source.image(), key.strength(), key.seed));

  static std::atomic<std::uint64_t> counter{0};
  fs::path temp = target;
  temp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter.fetch_add(1));
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    out.close();
    if (!out) {
      fs::remove(temp, ec);
      throw CacheError("cannot write " + temp.string());
    }
  }
  fs::rename(temp, target, ec);
  if (ec) {
    const auto reason = ec.message();
    fs::remove(temp, ec);
    throw CacheError("cannot publish " + target.string() + ": " + reason);
  }
  generated_.fetch_add(1);
  return target;
}

std::size_t count_cache_files(const fs::path& root) {
  std::error_code ec;
  if (!fs::exists(root, ec)) return 0;
  std::size_t n = 0;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") ++n;
  }
  return n;
}

}  // namespace affc
