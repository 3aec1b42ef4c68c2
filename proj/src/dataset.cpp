#include "skinseg/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "skinseg/rng.hpp"

namespace skinseg {

namespace fs = std::filesystem;

std::vector<int> Dataset::train_indices() const {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(samples.size()); ++i) {
    if (samples[i].split == Split::train) out.push_back(i);
  }
  return out;
}

std::vector<int> Dataset::test_indices() const {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(samples.size()); ++i) {
    if (samples[i].split == Split::test) out.push_back(i);
  }
  return out;
}

std::vector<int> Dataset::labeled_train_indices() const {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(samples.size()); ++i) {
    if (samples[i].split == Split::train && visible_mask(samples[i]) != nullptr) {
      out.push_back(i);
    }
  }
  return out;
}

namespace {

struct ManifestRow {
  Split split = Split::train;
  bool labeled = true;
};

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

std::map<std::string, ManifestRow> read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("manifest: cannot open " + path.string());
  std::map<std::string, ManifestRow> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string id, split_s, labeled_s;
    if (!std::getline(fields, id, ',') || !std::getline(fields, split_s, ',') ||
        !std::getline(fields, labeled_s)) {
      throw DataError("manifest: malformed line '" + line + "' in " + path.string());
    }
    id = trim(id);
    split_s = trim(split_s);
    labeled_s = trim(labeled_s);
    if (first && id == "id") {
      first = false;
      continue;  // header row
    }
    first = false;
    ManifestRow row;
    if (split_s == "train") {
      row.split = Split::train;
    } else if (split_s == "test") {
      row.split = Split::test;
    } else {
      throw DataError("manifest: unknown split '" + split_s + "' for id " + id);
    }
    if (labeled_s == "1" || labeled_s == "true") {
      row.labeled = true;
    } else if (labeled_s == "0" || labeled_s == "false") {
      row.labeled = false;
    } else {
      throw DataError("manifest: unknown labeled flag '" + labeled_s + "' for id " + id);
    }
    if (!rows.emplace(id, row).second) {
      throw DataError("manifest: duplicate id " + id);
    }
  }
  return rows;
}

constexpr int kMaskThreshold = 128;

}  // namespace

Dataset load_dataset(const fs::path& root, const std::optional<fs::path>& manifest,
                     const std::string& domain) {
  const fs::path images_dir = root / "images";
  const fs::path masks_dir = root / "masks";
  if (!fs::is_directory(images_dir)) {
    throw DataError("load_dataset: missing directory " + images_dir.string());
  }

  std::vector<std::string> stems;
  for (const auto& entry : fs::directory_iterator(images_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".ppm") {
      stems.push_back(entry.path().stem().string());
    }
  }
  std::sort(stems.begin(), stems.end());

  std::optional<fs::path> manifest_path = manifest;
  if (!manifest_path && fs::exists(root / "manifest.csv")) {
    manifest_path = root / "manifest.csv";
  }
  std::map<std::string, ManifestRow> rows;
  if (manifest_path) {
    rows = read_manifest(*manifest_path);
    for (const auto& [id, row] : rows) {
      if (!std::binary_search(stems.begin(), stems.end(), id)) {
        throw DataError("load_dataset: manifest id '" + id + "' has no image file");
      }
    }
  }

  Dataset ds;
  ds.domain = domain.empty() ? root.filename().string() : domain;
  for (const auto& stem : stems) {
    const ManifestRow* row = nullptr;
    if (manifest_path) {
      auto it = rows.find(stem);
      if (it == rows.end()) continue;  // manifest defines the dataset
      row = &it->second;
    }

    ImageSample sample(stem, ds.domain,
                       image_from_pnm(read_pnm(images_dir / (stem + ".ppm"))));
    const fs::path mask_path = masks_dir / (stem + ".pgm");
    if (fs::exists(mask_path)) {
      Mask mask = binarize_mask(gray_from_pnm(read_pnm(mask_path)), kMaskThreshold);
      if (mask.rows() != sample.pixels.ch[0].rows() ||
          mask.cols() != sample.pixels.ch[0].cols()) {
        throw DataError("load_dataset: image/mask dimension mismatch for id " + stem);
      }
      sample.mask = std::move(mask);
    }

    if (row) {
      sample.split = row->split;
      sample.labeled = row->labeled;
      if (sample.labeled && !sample.mask) {
        throw DataError("load_dataset: id '" + stem +
                        "' is declared labeled but has no mask file");
      }
    } else {
      sample.split = Split::train;
      sample.labeled = sample.mask.has_value();
    }
    ds.samples.push_back(std::move(sample));
  }
  return ds;
}

void save_dataset(const Dataset& ds, const fs::path& root) {
  fs::create_directories(root / "images");
  fs::create_directories(root / "masks");
  std::ofstream manifest(root / "manifest.csv");
  if (!manifest) throw DataError("save_dataset: cannot write manifest under " + root.string());
  manifest << "id,split,labeled\n";
  for (const auto& s : ds.samples) {
    write_pnm(root / "images" / (s.id + ".ppm"), pnm_from_image(s.pixels));
    if (s.mask) {
      write_pnm(root / "masks" / (s.id + ".pgm"),
                pnm_from_gray(s.mask->cast<float>() * 255.0f));
    }
    manifest << s.id << "," << (s.split == Split::train ? "train" : "test") << ","
             << (s.labeled ? 1 : 0) << "\n";
  }
  if (!manifest) throw DataError("save_dataset: write failure under " + root.string());
}

Dataset split_dataset(const Dataset& ds, double test_fraction, uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw DataError("split_dataset: test fraction must lie strictly inside (0,1)");
  }
  const int n = static_cast<int>(ds.samples.size());
  if (n < 2) throw DataError("split_dataset: need at least 2 samples");

  const int n_test = static_cast<int>(std::ceil(n * test_fraction));
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  RngStream rng(derive_seed(seed, "split"));
  rng.shuffle(order);

  Dataset out = ds;
  for (auto& s : out.samples) s.split = Split::train;
  for (int i = 0; i < n_test; ++i) out.samples[order[i]].split = Split::test;
  return out;
}

Dataset subsample_labels(const Dataset& ds, double budget, uint64_t seed) {
  if (!(budget >= 0.0 && budget <= 1.0)) {
    throw DataError("subsample_labels: label budget must lie in [0,1]");
  }
  std::vector<int> train = ds.train_indices();
  const int n_keep =
      static_cast<int>(std::floor(budget * static_cast<double>(train.size()) + 0.5));

  RngStream rng(derive_seed(seed, "labels"));
  rng.shuffle(train);

  Dataset out = ds;
  for (int idx : train) out.samples[idx].labeled = false;
  for (int i = 0; i < n_keep; ++i) {
    ImageSample& s = out.samples[train[i]];
    if (!s.mask) {
      throw DataError("subsample_labels: sample '" + s.id +
                      "' has no mask to expose as a label");
    }
    s.labeled = true;
  }
  return out;
}

}  // namespace skinseg
