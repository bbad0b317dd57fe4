#include "vexad/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "vexad/errors.hpp"
#include "vexad/rng.hpp"

namespace vexad {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int block_edge(int b) { return b * kPatchSide / kPixelBlocks; }

std::uint8_t to_byte(double v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

// Negatives mix several irrelevant-change modes: none, illumination, thin
// cloud, shadow band, small local changes, and a heavy tail of artefacts
// (thick cloud, misregistration) that are larger than any relevant change.
// Positives: a mid-intensity structure change in the upper-left quadrant.
void fill_pixel_pair(Sample& s, Rng& rng) {
    const double fr = rng.uniform(0.15, 0.45);
    const double fc = rng.uniform(0.15, 0.45);
    const double phase_r = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double phase_c = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double level = rng.uniform(100.0, 140.0);

    constexpr int N = kPatchSide;
    std::array<double, N * N> base{};
    for (int r = 0; r < N; ++r)
        for (int c = 0; c < N; ++c)
            base[r * N + c] = level + 30.0 * std::sin(fr * r + phase_r) * std::cos(fc * c + phase_c) +
                              rng.normal(0.0, 6.0);

    std::array<double, N * N> delta{};
    auto add_rect = [&](int r0, int c0, int h, int w, double v) {
        for (int r = std::max(r0, 0); r < std::min(r0 + h, N); ++r)
            for (int c = std::max(c0, 0); c < std::min(c0 + w, N); ++c) delta[r * N + c] += v;
    };
    auto pick = [&](int lo, int hi) { return lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1))); };

    if (s.label > 0) {
        add_rect(pick(4, 6), pick(4, 6), 8, 8, rng.uniform(45.0, 90.0));
        if (rng.uniform() < 0.3) add_rect(0, 0, N, N, rng.uniform(-10.0, 10.0));
    } else {
        const double u = rng.uniform();
        if (u < 0.35) {
            // unchanged scene, sensor noise only
        } else if (u < 0.55) {
            add_rect(0, 0, N, N, rng.uniform(4.0, 12.0) * (rng.below(2) ? 1.0 : -1.0));
        } else if (u < 0.70) {
            const int half = static_cast<int>(rng.below(4));
            const double cloud = rng.uniform(10.0, 30.0);
            if (half < 2)
                add_rect(half == 0 ? 0 : 15, 0, 15, N, cloud);
            else
                add_rect(0, half == 2 ? 0 : 15, N, 15, cloud);
        } else if (u < 0.78) {
            const int width = pick(6, 12);
            const int start = pick(0, N - width);
            const double shade = -rng.uniform(10.0, 25.0);
            if (rng.below(2))
                add_rect(start, 0, width, N, shade);
            else
                add_rect(0, start, N, width, shade);
        } else if (u < 0.85) {
            // weaker structure-like change where relevant changes occur
            const int side = pick(5, 8);
            add_rect(pick(3, 8), pick(3, 8), side, side, rng.uniform(20.0, 50.0));
        } else if (u < 0.92) {
            const int side = pick(3, 5);
            add_rect(pick(0, N - side), pick(0, N - side), side, side,
                     rng.uniform(20.0, 60.0) * (rng.below(2) ? 1.0 : -1.0));
        } else if (rng.below(2)) {
            const int h = pick(8, N), w = pick(8, N);
            add_rect(pick(0, N - h), pick(0, N - w), h, w, rng.uniform(60.0, 110.0));
        } else {
            const int dr = pick(-2, 2), dc = pick(1, 2) * (rng.below(2) ? 1 : -1);
            for (int r = 0; r < N; ++r)
                for (int c = 0; c < N; ++c) {
                    const int rr = std::clamp(r + dr, 0, N - 1), cc = std::clamp(c + dc, 0, N - 1);
                    delta[r * N + c] = base[rr * N + cc] - base[r * N + c];
                }
        }
    }

    PixelGrid before{}, after{};
    for (std::size_t i = 0; i < before.size(); ++i) {
        before[i] = to_byte(base[i] + rng.normal(0.0, 1.5));
        after[i] = to_byte(base[i] + delta[i] + rng.normal(0.0, 1.5));
    }
    s.features = pixel_block_features(before, after);
    s.pixels_before = before;
    s.pixels_after = after;
}

struct GaussianModes {
    std::vector<std::vector<double>> neg_centers;
    std::vector<double> neg_weights;
    std::vector<double> pos_center;
};

GaussianModes make_modes(int dim, Rng& rng) {
    GaussianModes m;
    m.neg_weights = {0.4, 0.3, 0.2, 0.1};
    for (std::size_t c = 0; c < m.neg_weights.size(); ++c) {
        std::vector<double> center(dim);
        for (auto& v : center) v = rng.normal(0.0, 3.0);
        m.neg_centers.push_back(std::move(center));
    }
    // Positive region: beyond the farthest negative center along a random
    // direction, so it is separated from every negative mode.
    std::vector<double> u(dim);
    double norm = 0.0;
    for (auto& v : u) {
        v = rng.normal();
        norm += v * v;
    }
    norm = std::sqrt(norm);
    for (auto& v : u) v /= norm;
    double proj_max = -INFINITY;
    std::vector<double> mean(dim, 0.0);
    for (const auto& c : m.neg_centers) {
        double p = 0.0;
        for (int j = 0; j < dim; ++j) {
            p += c[j] * u[j];
            mean[j] += c[j] / static_cast<double>(m.neg_centers.size());
        }
        proj_max = std::max(proj_max, p);
    }
    double mean_proj = 0.0;
    for (int j = 0; j < dim; ++j) mean_proj += mean[j] * u[j];
    m.pos_center.resize(dim);
    for (int j = 0; j < dim; ++j) m.pos_center[j] = mean[j] + (proj_max + 6.0 - mean_proj) * u[j];
    return m;
}

void fill_gaussian(Sample& s, const GaussianModes& m, Rng& rng) {
    const int dim = static_cast<int>(m.pos_center.size());
    s.features.resize(dim);
    if (s.label > 0) {
        for (int j = 0; j < dim; ++j) s.features[j] = m.pos_center[j] + rng.normal(0.0, 0.6);
        return;
    }
    const double u = rng.uniform();
    double acc = 0.0;
    std::size_t mode = m.neg_weights.size() - 1;
    for (std::size_t c = 0; c < m.neg_weights.size(); ++c) {
        acc += m.neg_weights[c];
        if (u < acc) {
            mode = c;
            break;
        }
    }
    for (int j = 0; j < dim; ++j) s.features[j] = m.neg_centers[mode][j] + rng.normal(0.0, 1.0);
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

template <typename T>
T parse_number(const std::string& text, const std::string& what) {
    T value{};
    std::string trimmed = text;
    while (!trimmed.empty() && (trimmed.back() == '\r' || trimmed.back() == ' ')) trimmed.pop_back();
    const auto* first = trimmed.data();
    const auto* last = trimmed.data() + trimmed.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || trimmed.empty())
        throw ValidationError(what + ": cannot parse '" + text + "'");
    return value;
}

std::vector<std::string> read_lines(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw ValidationError("cannot open " + p.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) lines.push_back(line);
    }
    return lines;
}

}  // namespace

int Dataset::positives() const {
    return static_cast<int>(std::count_if(samples.begin(), samples.end(), [](const Sample& s) { return s.label > 0; }));
}

std::vector<double> pixel_block_features(const PixelGrid& before, const PixelGrid& after) {
    std::vector<double> f(kPixelFeatureDim, 0.0);
    for (int br = 0; br < kPixelBlocks; ++br)
        for (int bc = 0; bc < kPixelBlocks; ++bc) {
            double sum = 0.0;
            int count = 0;
            for (int r = block_edge(br); r < block_edge(br + 1); ++r)
                for (int c = block_edge(bc); c < block_edge(bc + 1); ++c) {
                    sum += std::abs(static_cast<int>(after[r * kPatchSide + c]) -
                                    static_cast<int>(before[r * kPatchSide + c]));
                    ++count;
                }
            f[br * kPixelBlocks + bc] = sum / count;
        }
    return f;
}

Dataset generate_synthetic(int n, int dim, double pos_fraction, std::uint64_t seed) {
    if (!std::isfinite(pos_fraction)) throw std::invalid_argument("pos_fraction must be finite");
    if (n < 4) throw std::invalid_argument("n must be >= 4");
    if (dim < 2) throw std::invalid_argument("dim must be >= 2");
    if (!(pos_fraction > 0.0 && pos_fraction < 1.0)) throw std::invalid_argument("pos_fraction must be in (0, 1)");
    const long n_pos = std::lround(n * pos_fraction);
    if (n_pos == 0) throw std::invalid_argument("round(n * pos_fraction) is 0: no positive samples");
    if (n_pos >= n) throw std::invalid_argument("round(n * pos_fraction) leaves no negative samples");

    Rng rng(seed);
    std::vector<int> labels(n, -1);
    std::fill(labels.begin(), labels.begin() + n_pos, +1);
    rng.shuffle(labels);

    Dataset ds;
    ds.dim = dim;
    std::ostringstream name;
    name << "synthetic-n" << n << "-d" << dim << "-s" << seed;
    ds.name = name.str();
    ds.samples.resize(n);

    const bool pixel_mode = dim == kPixelFeatureDim;
    GaussianModes modes;
    if (!pixel_mode) modes = make_modes(dim, rng);
    for (int i = 0; i < n; ++i) {
        Sample& s = ds.samples[i];
        s.id = i;
        s.label = labels[i];
        if (pixel_mode)
            fill_pixel_pair(s, rng);
        else
            fill_gaussian(s, modes, rng);
    }
    return ds;
}

Split split_half(const Dataset& ds, std::uint64_t seed) {
    if (ds.size() < 2) throw std::invalid_argument("split_half needs at least 2 samples");
    std::vector<int> pos, neg;
    for (const auto& s : ds.samples) (s.label > 0 ? pos : neg).push_back(s.id);
    Rng rng(seed);
    rng.shuffle(pos);
    rng.shuffle(neg);
    std::vector<int> order = pos;
    order.insert(order.end(), neg.begin(), neg.end());

    Split split;
    for (std::size_t i = 0; i < order.size(); ++i) (i % 2 == 0 ? split.train_ids : split.eval_ids).push_back(order[i]);
    std::sort(split.train_ids.begin(), split.train_ids.end());
    std::sort(split.eval_ids.begin(), split.eval_ids.end());
    return split;
}

void write_pgm(const fs::path& path, const PixelGrid& grid) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "P5\n" << kPatchSide << ' ' << kPatchSide << "\n255\n";
    out.write(reinterpret_cast<const char*>(grid.data()), static_cast<std::streamsize>(grid.size()));
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

PixelGrid read_pgm(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path.string());
    // Header tokens may be separated by any whitespace and '#' comments.
    auto token = [&]() {
        std::string t;
        char ch;
        while (in.get(ch)) {
            if (ch == '#') {
                std::string skip;
                std::getline(in, skip);
                continue;
            }
            if (std::isspace(static_cast<unsigned char>(ch))) {
                if (!t.empty()) break;
                continue;
            }
            t.push_back(ch);
        }
        return t;
    };
    const std::string magic = token();
    const std::string w = token(), h = token(), maxval = token();
    if (magic != "P5") throw ValidationError(path.string() + ": not a binary PGM (P5)");
    if (w != "30" || h != "30") throw ValidationError(path.string() + ": expected 30x30, got " + w + "x" + h);
    if (maxval != "255") throw ValidationError(path.string() + ": maxval must be 255");
    PixelGrid grid{};
    in.read(reinterpret_cast<char*>(grid.data()), static_cast<std::streamsize>(grid.size()));
    if (in.gcount() != static_cast<std::streamsize>(grid.size()))
        throw ValidationError(path.string() + ": truncated pixel data");
    return grid;
}

void save(const Dataset& ds, const fs::path& dir) {
    fs::create_directories(dir);
    const bool has_pixels = std::any_of(ds.samples.begin(), ds.samples.end(),
                                        [](const Sample& s) { return s.pixels_before.has_value(); });

    json manifest = {{"name", ds.name},
                     {"n", ds.size()},
                     {"dim", ds.dim},
                     {"features_file", "features.csv"},
                     {"labels_file", "labels.csv"}};
    if (has_pixels) manifest["pixels_dir"] = "pixels";
    {
        std::ofstream out(dir / "manifest.json");
        if (!out) throw std::runtime_error("cannot write " + (dir / "manifest.json").string());
        out << manifest.dump(2) << '\n';
    }
    {
        std::ofstream out(dir / "features.csv");
        if (!out) throw std::runtime_error("cannot write features.csv");
        out << "id";
        for (int j = 0; j < ds.dim; ++j) out << ",f" << j;
        out << '\n';
        for (const auto& s : ds.samples) {
            out << s.id;
            for (double v : s.features) out << ',' << format_double(v);
            out << '\n';
        }
    }
    {
        std::ofstream out(dir / "labels.csv");
        if (!out) throw std::runtime_error("cannot write labels.csv");
        out << "id,label\n";
        for (const auto& s : ds.samples) out << s.id << ',' << s.label << '\n';
    }
    if (has_pixels) {
        fs::create_directories(dir / "pixels");
        for (const auto& s : ds.samples) {
            if (!s.pixels_before || !s.pixels_after) continue;
            write_pgm(dir / "pixels" / (std::to_string(s.id) + "_a.pgm"), *s.pixels_before);
            write_pgm(dir / "pixels" / (std::to_string(s.id) + "_b.pgm"), *s.pixels_after);
        }
    }
}

Dataset load(const fs::path& path) {
    const fs::path manifest_path = fs::is_directory(path) ? path / "manifest.json" : path;
    const fs::path root = manifest_path.parent_path();

    json manifest;
    {
        std::ifstream in(manifest_path);
        if (!in) throw ValidationError("cannot open manifest " + manifest_path.string());
        try {
            manifest = json::parse(in);
        } catch (const json::parse_error& e) {
            throw ValidationError("malformed manifest " + manifest_path.string() + ": " + e.what());
        }
    }
    for (const char* key : {"name", "n", "dim", "features_file", "labels_file"})
        if (!manifest.contains(key)) throw ValidationError(std::string("malformed manifest: missing \"") + key + "\"");

    Dataset ds;
    std::size_t n = 0;
    try {
        ds.name = manifest.at("name").get<std::string>();
        n = manifest.at("n").get<std::size_t>();
        ds.dim = manifest.at("dim").get<int>();
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed manifest: ") + e.what());
    }
    if (ds.dim < 1) throw ValidationError("malformed manifest: dim must be positive");

    ds.samples.resize(n);
    std::vector<bool> seen_feat(n, false), seen_label(n, false);

    const auto feat_lines = read_lines(root / manifest.at("features_file").get<std::string>());
    if (feat_lines.empty()) throw ValidationError("features file is empty");
    const auto header = split_csv_line(feat_lines.front());
    if (header.size() != static_cast<std::size_t>(ds.dim) + 1 || header[0] != "id")
        throw ValidationError("features header does not match dim " + std::to_string(ds.dim));
    for (std::size_t li = 1; li < feat_lines.size(); ++li) {
        const auto cells = split_csv_line(feat_lines[li]);
        const int id = parse_number<int>(cells.at(0), "feature row " + std::to_string(li) + " id");
        if (id < 0 || static_cast<std::size_t>(id) >= n)
            throw ValidationError("feature row id " + std::to_string(id) + " outside [0, n)");
        if (seen_feat[id]) throw ValidationError("duplicate id " + std::to_string(id) + " in features file");
        if (cells.size() != static_cast<std::size_t>(ds.dim) + 1)
            throw ValidationError("feature row id " + std::to_string(id) + " has " + std::to_string(cells.size() - 1) +
                                  " values, expected dim " + std::to_string(ds.dim));
        seen_feat[id] = true;
        Sample& s = ds.samples[id];
        s.id = id;
        s.features.resize(ds.dim);
        for (int j = 0; j < ds.dim; ++j)
            s.features[j] = parse_number<double>(cells[j + 1], "feature row id " + std::to_string(id));
    }

    const auto label_lines = read_lines(root / manifest.at("labels_file").get<std::string>());
    if (label_lines.empty() || split_csv_line(label_lines.front()) != std::vector<std::string>{"id", "label"})
        throw ValidationError("labels header must be 'id,label'");
    for (std::size_t li = 1; li < label_lines.size(); ++li) {
        const auto cells = split_csv_line(label_lines[li]);
        if (cells.size() != 2) throw ValidationError("labels row " + std::to_string(li) + " must have 2 fields");
        const int id = parse_number<int>(cells[0], "labels row " + std::to_string(li) + " id");
        if (id < 0 || static_cast<std::size_t>(id) >= n)
            throw ValidationError("label row id " + std::to_string(id) + " outside [0, n)");
        if (seen_label[id]) throw ValidationError("duplicate id " + std::to_string(id) + " in labels file");
        const int label = parse_number<int>(cells[1], "label of id " + std::to_string(id));
        if (label != -1 && label != 1)
            throw ValidationError("label must be -1 or +1 (id " + std::to_string(id) + " has " + cells[1] + ")");
        seen_label[id] = true;
        ds.samples[id].label = label;
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!seen_feat[i]) throw ValidationError("missing feature row for id " + std::to_string(i));
        if (!seen_label[i]) throw ValidationError("missing label for id " + std::to_string(i));
    }

    if (manifest.contains("pixels_dir") && !manifest["pixels_dir"].is_null()) {
        const fs::path pdir = root / manifest["pixels_dir"].get<std::string>();
        for (auto& s : ds.samples) {
            const auto a = pdir / (std::to_string(s.id) + "_a.pgm");
            const auto b = pdir / (std::to_string(s.id) + "_b.pgm");
            if (fs::exists(a) && fs::exists(b)) {
                s.pixels_before = read_pgm(a);
                s.pixels_after = read_pgm(b);
            }
        }
    }
    return ds;
}

Eigen::MatrixXd feature_matrix(const Dataset& ds, std::span<const int> ids) {
    Eigen::MatrixXd X(ds.dim, static_cast<Eigen::Index>(ids.size()));
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const auto& f = ds.samples.at(ids[i]).features;
        for (int j = 0; j < ds.dim; ++j) X(j, static_cast<Eigen::Index>(i)) = f[j];
    }
    return X;
}

std::vector<int> labels_of(const Dataset& ds, std::span<const int> ids) {
    std::vector<int> out;
    out.reserve(ids.size());
    for (int id : ids) out.push_back(ds.samples.at(id).label);
    return out;
}

}  // namespace vexad
