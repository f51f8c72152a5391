#include "jova/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "jova/io_util.hpp"

namespace jova {

namespace {

constexpr char kDatasetMagic[9] = "JOVADS01";

std::vector<std::string> split_fields(const std::string& line, FileFormat format) {
    std::vector<std::string> fields;
    if (format == FileFormat::movielens_dat) {
        std::size_t pos = 0;
        while (true) {
            const std::size_t next = line.find("::", pos);
            if (next == std::string::npos) {
                fields.push_back(line.substr(pos));
                break;
            }
            fields.push_back(line.substr(pos, next - pos));
            pos = next + 2;
        }
    } else {
        const char delim = (format == FileFormat::tsv) ? '\t' : ',';
        std::size_t pos = 0;
        while (true) {
            const std::size_t next = line.find(delim, pos);
            if (next == std::string::npos) {
                fields.push_back(line.substr(pos));
                break;
            }
            fields.push_back(line.substr(pos, next - pos));
            pos = next + 1;
        }
    }
    return fields;
}

bool parse_double(const std::string& s, double& out) {
    try {
        std::size_t consumed = 0;
        out = std::stod(s, &consumed);
        // allow trailing \r from CRLF files
        while (consumed < s.size() && (s[consumed] == '\r' || s[consumed] == ' ')) ++consumed;
        return consumed == s.size() && std::isfinite(out);
    } catch (...) {
        return false;
    }
}

std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

}  // namespace

FileFormat parse_file_format(const std::string& name) {
    if (name == "csv") return FileFormat::csv;
    if (name == "tsv") return FileFormat::tsv;
    if (name == "movielens-dat" || name == "dat") return FileFormat::movielens_dat;
    throw std::invalid_argument("unknown input format: " + name);
}

std::string file_format_name(FileFormat f) {
    switch (f) {
        case FileFormat::csv: return "csv";
        case FileFormat::tsv: return "tsv";
        case FileFormat::movielens_dat: return "movielens-dat";
    }
    return "csv";
}

IngestResult ingest(const std::string& path, const IngestOptions& opts) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open input file: " + path);

    IngestResult res;
    const int max_col = std::max({opts.user_col, opts.item_col, opts.rating_col});
    std::string line;
    std::size_t line_number = 0;
    bool header_pending = opts.has_header;
    while (std::getline(in, line)) {
        ++line_number;
        if (strip_cr(line).empty()) continue;
        if (header_pending) {
            header_pending = false;
            continue;
        }
        ++res.total_lines;

        const std::vector<std::string> fields = split_fields(line, opts.format);
        bool ok = static_cast<int>(fields.size()) > max_col;
        RawRating r;
        if (ok) {
            r.user_id = strip_cr(fields[static_cast<std::size_t>(opts.user_col)]);
            r.item_id = strip_cr(fields[static_cast<std::size_t>(opts.item_col)]);
            ok = !r.user_id.empty() && !r.item_id.empty();
        }
        if (ok) {
            if (opts.rating_col < 0) {
                r.value = 1.0;
            } else {
                ok = parse_double(fields[static_cast<std::size_t>(opts.rating_col)], r.value);
            }
        }
        if (ok) {
            res.ratings.push_back(std::move(r));
        } else {
            ++res.malformed;
            if (res.malformed_line_numbers.size() < 10) {
                res.malformed_line_numbers.push_back(line_number);
            }
        }
    }

    if (res.total_lines > 0 &&
        static_cast<double>(res.malformed) >
            opts.max_malformed_fraction * static_cast<double>(res.total_lines)) {
        std::ostringstream msg;
        msg << path << ": " << res.malformed << " of " << res.total_lines
            << " lines malformed (threshold " << opts.max_malformed_fraction * 100.0
            << "%); first bad lines:";
        for (std::size_t ln : res.malformed_line_numbers) msg << " " << ln;
        throw std::runtime_error(msg.str());
    }
    return res;
}

std::vector<RawRating> binarize(const std::vector<RawRating>& ratings, double threshold) {
    std::vector<RawRating> out;
    std::unordered_map<std::string, std::uint32_t> seen;  // "user\x1fitem" -> 1
    out.reserve(ratings.size());
    for (const RawRating& r : ratings) {
        if (r.value < threshold) continue;
        std::string key = r.user_id;
        key.push_back('\x1f');
        key += r.item_id;
        if (!seen.emplace(std::move(key), 1).second) continue;  // duplicate pair
        out.push_back({r.user_id, r.item_id, 1.0});
    }
    return out;
}

std::vector<RawRating> filter_min_interactions(const std::vector<RawRating>& interactions,
                                               std::uint32_t min_count) {
    std::unordered_map<std::string, std::uint32_t> counts;
    for (const RawRating& r : interactions) ++counts[r.user_id];
    std::vector<RawRating> out;
    out.reserve(interactions.size());
    for (const RawRating& r : interactions) {
        if (counts[r.user_id] >= min_count) out.push_back(r);
    }
    if (out.empty()) {
        throw std::runtime_error("filter_min_interactions: no users left with at least " +
                                 std::to_string(min_count) + " interactions");
    }
    return out;
}

void InteractionMatrix::rebuild_adjacency() {
    for (auto& adj : items_by_user) adj.assign(user_count(), {});
    for (auto& adj : users_by_item) adj.assign(item_count(), {});
    for (const Interaction& it : interactions) {
        items_by_user[static_cast<std::size_t>(it.split)][it.user].push_back(it.item);
        users_by_item[static_cast<std::size_t>(it.split)][it.item].push_back(it.user);
    }
    for (auto& adj : items_by_user) {
        for (auto& v : adj) std::sort(v.begin(), v.end());
    }
    for (auto& adj : users_by_item) {
        for (auto& v : adj) std::sort(v.begin(), v.end());
    }
}

DenseMatrix InteractionMatrix::dense_rows(const std::vector<std::uint32_t>& users,
                                          Split s) const {
    DenseMatrix slab(users.size(), item_count(), 0.0);
    for (std::size_t r = 0; r < users.size(); ++r) {
        for (std::uint32_t i : items_of(users[r], s)) slab(r, i) = 1.0;
    }
    return slab;
}

DenseMatrix InteractionMatrix::dense_cols(const std::vector<std::uint32_t>& items,
                                          Split s) const {
    DenseMatrix slab(items.size(), user_count(), 0.0);
    for (std::size_t r = 0; r < items.size(); ++r) {
        for (std::uint32_t u : users_of(items[r], s)) slab(r, u) = 1.0;
    }
    return slab;
}

InteractionMatrix split(const std::vector<RawRating>& interactions, double train_ratio,
                        double valid_ratio, double test_ratio, Rng& rng) {
    if (std::fabs(train_ratio + valid_ratio + test_ratio - 1.0) > 1e-9) {
        throw std::invalid_argument("split: ratios must sum to 1");
    }
    if (interactions.empty()) throw std::invalid_argument("split: no interactions");

    InteractionMatrix m;
    m.split_seed = rng.seed();

    for (const RawRating& r : interactions) {
        if (m.user_index.emplace(r.user_id, static_cast<std::uint32_t>(m.user_ids.size())).second) {
            m.user_ids.push_back(r.user_id);
        }
        if (m.item_index.emplace(r.item_id, static_cast<std::uint32_t>(m.item_ids.size())).second) {
            m.item_ids.push_back(r.item_id);
        }
    }

    const std::size_t n = interactions.size();
    std::vector<std::uint32_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<std::uint32_t>(i);
    for (std::size_t i = n; i > 1; --i) {  // Fisher-Yates
        const std::size_t j = rng.uniform_below(i);
        std::swap(order[i - 1], order[j]);
    }

    const std::size_t n_valid = static_cast<std::size_t>(
        std::llround(valid_ratio * static_cast<double>(n)));
    const std::size_t n_test = static_cast<std::size_t>(
        std::llround(test_ratio * static_cast<double>(n)));
    const std::size_t n_train = n - std::min(n, n_valid + n_test);

    m.interactions.reserve(n);
    for (std::size_t pos = 0; pos < n; ++pos) {
        const RawRating& r = interactions[order[pos]];
        Interaction it;
        it.user = m.user_index.at(r.user_id);
        it.item = m.item_index.at(r.item_id);
        it.split = pos < n_train            ? Split::train
                   : pos < n_train + n_valid ? Split::valid
                                             : Split::test;
        m.interactions.push_back(it);
    }
    std::sort(m.interactions.begin(), m.interactions.end(),
              [](const Interaction& a, const Interaction& b) {
                  return a.user != b.user ? a.user < b.user : a.item < b.item;
              });
    m.rebuild_adjacency();
    return m;
}

DatasetStats stats(const InteractionMatrix& m) {
    DatasetStats s;
    s.users = m.user_count();
    s.items = m.item_count();
    s.interactions = m.interactions.size();
    const double cells = static_cast<double>(s.users) * static_cast<double>(s.items);
    s.sparsity = cells > 0 ? 1.0 - static_cast<double>(s.interactions) / cells : 0.0;
    return s;
}

void save_dataset(const std::string& path, const InteractionMatrix& m) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write dataset file: " + path);
    io::write_magic(out, kDatasetMagic);
    io::write_u64(out, m.user_count());
    io::write_u64(out, m.item_count());
    io::write_u64(out, m.interactions.size());
    io::write_u64(out, m.split_seed);
    io::write_f64(out, m.binarize_threshold);
    io::write_u32(out, m.min_user_interactions);
    for (const std::string& id : m.user_ids) io::write_string(out, id);
    for (const std::string& id : m.item_ids) io::write_string(out, id);
    for (const Interaction& it : m.interactions) {
        io::write_u32(out, it.user);
        io::write_u32(out, it.item);
        io::write_u8(out, static_cast<std::uint8_t>(it.split));
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

InteractionMatrix load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open dataset file: " + path);
    io::expect_magic(in, kDatasetMagic, "dataset file");

    InteractionMatrix m;
    const std::uint64_t n_users = io::read_u64(in);
    const std::uint64_t n_items = io::read_u64(in);
    const std::uint64_t n_inter = io::read_u64(in);
    m.split_seed = io::read_u64(in);
    m.binarize_threshold = io::read_f64(in);
    m.min_user_interactions = io::read_u32(in);

    m.user_ids.reserve(n_users);
    for (std::uint64_t i = 0; i < n_users; ++i) {
        m.user_ids.push_back(io::read_string(in));
        m.user_index.emplace(m.user_ids.back(), static_cast<std::uint32_t>(i));
    }
    m.item_ids.reserve(n_items);
    for (std::uint64_t i = 0; i < n_items; ++i) {
        m.item_ids.push_back(io::read_string(in));
        m.item_index.emplace(m.item_ids.back(), static_cast<std::uint32_t>(i));
    }
    m.interactions.reserve(n_inter);
    for (std::uint64_t i = 0; i < n_inter; ++i) {
        Interaction it;
        it.user = io::read_u32(in);
        it.item = io::read_u32(in);
        const std::uint8_t s = io::read_u8(in);
        if (it.user >= n_users || it.item >= n_items || s > 2) {
            throw std::runtime_error("dataset file: corrupt interaction record");
        }
        it.split = static_cast<Split>(s);
        m.interactions.push_back(it);
    }
    m.rebuild_adjacency();
    return m;
}

}  // namespace jova
