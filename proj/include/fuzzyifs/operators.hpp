#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "nets.hpp"
#include "sets.hpp"
#include "systems.hpp"

namespace fuzzyifs {

struct StepDiagnostics {
    std::uint64_t clamp_events = 0;
    std::uint64_t evaluations = 0;
    std::uint64_t grey_clamps = 0;
};

struct Limits {
    /// Map evaluations allowed in one crisp step (L · |W|^m).
    std::uint64_t max_evaluations = 4'000'000'000ULL;
    /// Φ⁻¹ records allowed in RAM.
    std::uint64_t max_ram_records = 150'000'000ULL;
    /// Φ⁻¹ records allowed in a file.
    std::uint64_t max_file_records = 2'000'000'000ULL;
    /// Records buffered per pass while writing a table file.
    std::uint64_t file_chunk_records = 8'000'000ULL;
};

namespace detail {

inline std::uint64_t checked_power(std::uint64_t base, int m, std::uint64_t factor) {
    long double v = static_cast<long double>(factor);
    for (int i = 0; i < m; ++i)
        v *= static_cast<long double>(base);
    return v > 1.8e19L ? UINT64_MAX : static_cast<std::uint64_t>(v);
}

/// Visit every m-tuple of `pts` in lexicographic order (last component fastest).
template <class F>
void for_each_tuple(std::span<const std::uint32_t> pts, int m, F&& f) {
    if (pts.empty())
        return;
    std::vector<std::size_t> odo(m, 0);
    std::vector<std::uint32_t> tuple(m, pts[0]);
    for (;;) {
        f(std::span<const std::uint32_t>(tuple));
        int pos = m - 1;
        while (pos >= 0 && ++odo[pos] == pts.size()) {
            odo[pos] = 0;
            tuple[pos] = pts[0];
            --pos;
        }
        if (pos < 0)
            return;
        tuple[pos] = pts[odo[pos]];
    }
}

/// r(φ_j(x_1..x_m)) for grid-point inputs. Shared by every operator so that
/// crisp steps and Φ⁻¹ tables agree bit for bit.
class DiscreteMap {
public:
    DiscreteMap(const SystemSpec& spec, const Net& net) : spec_(spec), net_(net), buf_(spec.arity) {}

    std::uint32_t operator()(std::size_t j, std::span<const std::uint32_t> tuple, StepDiagnostics& diag) {
        for (std::size_t i = 0; i < tuple.size(); ++i)
            buf_[i] = net_.coords(tuple[i]);
        ++diag.evaluations;
        return net_.project_clamped(spec_.maps[j].apply(buf_), diag.clamp_events);
    }

private:
    const SystemSpec& spec_;
    const Net& net_;
    std::vector<Point> buf_;
};

inline void check_compatible(const SystemSpec& spec, const Net& net) {
    if (spec.dim() != net.dim() || !(spec.box == net.box()))
        throw Error("net does not match the system's box");
    for (const auto& m : spec.maps)
        if (m.arity() != spec.arity || m.dim() != spec.dim())
            throw Error("map shape does not match the system");
}

} // namespace detail

/// F̄(W) = { r(φ_j(x_1..x_m)) : j, (x_1..x_m) in W^m }.
inline DiscreteSet generalized_hutchinson_step(const SystemSpec& spec, const Net& net, const DiscreteSet& w,
                                               const Limits& limits = {}, StepDiagnostics* diag = nullptr) {
    detail::check_compatible(spec, net);
    if (w.empty())
        throw Error("Hutchinson step on an empty set");
    if (!(w.grid == net.grid()))
        throw Error("set does not live on the net's grid");
    const std::uint64_t work = detail::checked_power(w.size(), spec.arity, spec.maps.size());
    if (work > limits.max_evaluations)
        throw BudgetError("step needs " + std::to_string(work) + " map evaluations (limit " +
                          std::to_string(limits.max_evaluations) + "); reduce n or use an aleatory net");

    StepDiagnostics local;
    StepDiagnostics& d = diag ? *diag : local;
    std::vector<std::uint8_t> hit(net.grid().size(), 0);
    detail::DiscreteMap phi(spec, net);
    for (std::size_t j = 0; j < spec.maps.size(); ++j)
        detail::for_each_tuple(w.points, spec.arity,
                               [&](std::span<const std::uint32_t> t) { hit[phi(j, t, d)] = 1; });

    DiscreteSet out;
    out.grid = net.grid();
    for (std::uint32_t i = 0; i < hit.size(); ++i)
        if (hit[i])
            out.points.push_back(i);
    return out;
}

/// F(W) = ∪_j r(φ_j(W)) for an ordinary (arity 1) system.
inline DiscreteSet hutchinson_step(const SystemSpec& spec, const Net& net, const DiscreteSet& w,
                                   StepDiagnostics* diag = nullptr) {
    if (spec.arity != 1)
        throw Error("hutchinson_step needs an arity-1 system");
    return generalized_hutchinson_step(spec, net, w, Limits{}, diag);
}

enum class TableBackend { ram, file };

struct TableHeader {
    std::uint32_t maps = 0;
    std::uint32_t arity = 1;
    std::uint32_t dim = 2;
    std::uint32_t n = 1;
    std::uint64_t record_count = 0;
};

/// One Φ⁻¹ record: target = r(φ_j(source)); j is 1-based.
struct TableRecord {
    std::uint32_t j = 0;
    std::vector<std::uint32_t> source;
    std::uint32_t target = 0;

    bool operator==(const TableRecord&) const = default;
};

/* Φ⁻¹ file layout (all integers little endian):
 *
 *   "PHIINV01"                         8 bytes
 *   u32 version (=1), u32 L, u32 m, u32 d, u32 n, u64 record_count
 *   record_count × { u32 j, m·d × u32 source grid index, d × u32 target grid index }
 *
 * Records are sorted by (target, j, source), all lexicographic.
 */
inline constexpr char kTableMagic[8] = {'P', 'H', 'I', 'I', 'N', 'V', '0', '1'};
inline constexpr std::uint32_t kTableVersion = 1;
inline constexpr std::size_t kTableHeaderBytes = 8 + 5 * 4 + 8;

namespace detail {

inline void put_u32(std::vector<char>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i)
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void put_u64(std::vector<char>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i)
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline std::uint32_t get_u32(const unsigned char* p) {
    return std::uint32_t{p[0]} | std::uint32_t{p[1]} << 8 | std::uint32_t{p[2]} << 16 | std::uint32_t{p[3]} << 24;
}

inline std::uint64_t get_u64(const unsigned char* p) {
    return std::uint64_t{get_u32(p)} | std::uint64_t{get_u32(p + 4)} << 32;
}

} // namespace detail

/// The relation Φ⁻¹ ⊂ {1..L} × X̂^m × X̂, grouped by target so a fuzzy step is
/// one sequential sweep. Kept either in memory or in a file.
class InverseImageTable {
public:
    TableBackend backend() const noexcept { return backend_; }
    const TableHeader& header() const noexcept { return header_; }
    const Grid& grid() const noexcept { return grid_; }
    std::uint64_t size() const noexcept { return header_.record_count; }
    const std::string& path() const noexcept { return path_; }

    std::size_t record_bytes() const noexcept {
        return 4 * (1 + header_.arity * header_.dim + header_.dim);
    }

    /// Calls f(target, j, source) for every record in (target, j, source) order.
    template <class F>
    void for_each_record(F&& f) const {
        if (backend_ == TableBackend::ram) {
            const std::size_t m = header_.arity;
            for (std::uint32_t t = 0; t + 1 < offsets_.size(); ++t)
                for (std::uint64_t r = offsets_[t]; r < offsets_[t + 1]; ++r)
                    f(t, std::uint32_t{js_[r]}, std::span<const std::uint32_t>(&sources_[r * m], m));
            return;
        }
        sweep_file(std::forward<F>(f));
    }

    std::vector<TableRecord> records() const {
        std::vector<TableRecord> out;
        for_each_record([&](std::uint32_t t, std::uint32_t j, std::span<const std::uint32_t> src) {
            out.push_back({j, {src.begin(), src.end()}, t});
        });
        return out;
    }

    /// Open an existing table file, checking it against the grid it was built on.
    static InverseImageTable open(const std::string& path, const Grid& grid) {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw IoError("cannot open table file " + path);
        unsigned char buf[kTableHeaderBytes];
        if (!in.read(reinterpret_cast<char*>(buf), sizeof buf))
            throw IoError("table file too short: " + path);
        if (std::memcmp(buf, kTableMagic, 8) != 0)
            throw IoError("not a PHIINV01 table: " + path);
        if (detail::get_u32(buf + 8) != kTableVersion)
            throw IoError("unsupported table version in " + path);
        InverseImageTable t;
        t.backend_ = TableBackend::file;
        t.path_ = path;
        t.grid_ = grid;
        t.header_.maps = detail::get_u32(buf + 12);
        t.header_.arity = detail::get_u32(buf + 16);
        t.header_.dim = detail::get_u32(buf + 20);
        t.header_.n = detail::get_u32(buf + 24);
        t.header_.record_count = detail::get_u64(buf + 28);
        if (t.header_.dim != static_cast<std::uint32_t>(grid.dim()) || t.header_.n != grid.subdivisions())
            throw Error("table file " + path + " was built for a different net");
        return t;
    }

private:
    friend InverseImageTable generate_inverse_table(const SystemSpec&, const Net&, TableBackend, const std::string&,
                                                    const Limits&, StepDiagnostics*);

    template <class F>
    void sweep_file(F&& f) const {
        std::ifstream in(path_, std::ios::binary);
        if (!in)
            throw IoError("cannot open table file " + path_);
        in.seekg(static_cast<std::streamoff>(kTableHeaderBytes));
        const std::size_t rb = record_bytes();
        const std::size_t m = header_.arity, d = header_.dim;
        const std::size_t per_chunk = std::max<std::size_t>(1, (1u << 20) / rb);
        std::vector<unsigned char> buf(per_chunk * rb);
        std::vector<std::uint32_t> src(m);
        std::uint64_t left = header_.record_count;
        while (left > 0) {
            const std::size_t batch = static_cast<std::size_t>(std::min<std::uint64_t>(left, per_chunk));
            if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(batch * rb)))
                throw IoError("table file truncated: " + path_);
            for (std::size_t r = 0; r < batch; ++r) {
                const unsigned char* p = buf.data() + r * rb;
                const std::uint32_t j = detail::get_u32(p);
                p += 4;
                for (std::size_t i = 0; i < m; ++i) {
                    GridIndex g{0, 0};
                    for (std::size_t k = 0; k < d; ++k, p += 4)
                        g[k] = detail::get_u32(p);
                    src[i] = grid_.linear(g);
                }
                GridIndex tg{0, 0};
                for (std::size_t k = 0; k < d; ++k, p += 4)
                    tg[k] = detail::get_u32(p);
                f(grid_.linear(tg), j, std::span<const std::uint32_t>(src));
            }
            left -= batch;
        }
    }

    TableBackend backend_ = TableBackend::ram;
    TableHeader header_{};
    Grid grid_{};
    std::string path_;
    std::vector<std::uint64_t> offsets_;
    std::vector<std::uint16_t> js_;
    std::vector<std::uint32_t> sources_;
};

/// Generate(Φ⁻¹): one record (j, x, r(φ_j(x))) per map and source tuple of net points.
inline InverseImageTable generate_inverse_table(const SystemSpec& spec, const Net& net, TableBackend backend,
                                                const std::string& path = {}, const Limits& limits = {},
                                                StepDiagnostics* diag = nullptr) {
    detail::check_compatible(spec, net);
    const std::vector<std::uint32_t> pts = net.points();
    const int m = spec.arity;
    const std::size_t L = spec.maps.size();
    if (L > 65535)
        throw Error("too many maps");
    const std::uint64_t total = detail::checked_power(pts.size(), m, L);
    const std::uint64_t cap = backend == TableBackend::ram ? limits.max_ram_records : limits.max_file_records;
    if (total > cap)
        throw BudgetError("inverse table needs " + std::to_string(total) + " records (limit " + std::to_string(cap) +
                          "); reduce n, use an aleatory net, or use the file backend");

    StepDiagnostics local;
    StepDiagnostics& d = diag ? *diag : local;
    detail::DiscreteMap phi(spec, net);
    const std::uint32_t gsize = net.grid().size();

    InverseImageTable table;
    table.backend_ = backend;
    table.grid_ = net.grid();
    table.header_ = {static_cast<std::uint32_t>(L), static_cast<std::uint32_t>(m),
                     static_cast<std::uint32_t>(net.dim()), net.subdivisions(), total};

    if (backend == TableBackend::ram) {
        std::vector<std::uint32_t> targets(total);
        std::vector<std::uint64_t> offsets(std::size_t{gsize} + 1, 0);
        std::uint64_t k = 0;
        for (std::size_t j = 0; j < L; ++j)
            detail::for_each_tuple(pts, m, [&](std::span<const std::uint32_t> t) {
                const std::uint32_t tg = phi(j, t, d);
                targets[k++] = tg;
                ++offsets[tg + 1];
            });
        for (std::size_t i = 1; i < offsets.size(); ++i)
            offsets[i] += offsets[i - 1];
        std::vector<std::uint64_t> cursor(offsets.begin(), offsets.end() - 1);
        table.js_.resize(total);
        table.sources_.resize(total * m);
        k = 0;
        for (std::size_t j = 0; j < L; ++j)
            detail::for_each_tuple(pts, m, [&](std::span<const std::uint32_t> t) {
                const std::uint64_t slot = cursor[targets[k++]]++;
                table.js_[slot] = static_cast<std::uint16_t>(j + 1);
                std::copy(t.begin(), t.end(), table.sources_.begin() + static_cast<std::ptrdiff_t>(slot * m));
            });
        table.offsets_ = std::move(offsets);
        return table;
    }

    if (path.empty())
        throw Error("file backend needs a table path");
    table.path_ = path;

    // Counting pass, then one regeneration pass per block of targets whose
    // records fit in the chunk buffer.
    std::vector<std::uint64_t> counts(gsize, 0);
    for (std::size_t j = 0; j < L; ++j)
        detail::for_each_tuple(pts, m, [&](std::span<const std::uint32_t> t) { ++counts[phi(j, t, d)]; });

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot create table file " + path);
    std::vector<char> bytes;
    bytes.insert(bytes.end(), std::begin(kTableMagic), std::end(kTableMagic));
    detail::put_u32(bytes, kTableVersion);
    detail::put_u32(bytes, table.header_.maps);
    detail::put_u32(bytes, table.header_.arity);
    detail::put_u32(bytes, table.header_.dim);
    detail::put_u32(bytes, table.header_.n);
    detail::put_u64(bytes, total);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));

    const Grid& grid = net.grid();
    const std::uint64_t chunk = std::max<std::uint64_t>(1, limits.file_chunk_records);
    std::uint32_t lo = 0;
    std::vector<std::uint32_t> rec_j;
    std::vector<std::uint32_t> rec_src;
    while (lo < gsize) {
        std::uint32_t hi = lo;
        std::uint64_t in_block = 0;
        while (hi < gsize && (hi == lo || in_block + counts[hi] <= chunk))
            in_block += counts[hi++];
        if (in_block > 0) {
            std::vector<std::uint64_t> cursor(hi - lo, 0);
            for (std::uint32_t t = lo + 1; t < hi; ++t)
                cursor[t - lo] = cursor[t - lo - 1] + counts[t - 1];
            rec_j.assign(in_block, 0);
            rec_src.assign(in_block * m, 0);
            std::vector<std::uint32_t> rec_t(in_block, 0);
            for (std::size_t j = 0; j < L; ++j)
                detail::for_each_tuple(pts, m, [&](std::span<const std::uint32_t> t) {
                    const std::uint32_t tg = phi(j, t, d);
                    if (tg < lo || tg >= hi)
                        return;
                    const std::uint64_t slot = cursor[tg - lo]++;
                    rec_j[slot] = static_cast<std::uint32_t>(j + 1);
                    rec_t[slot] = tg;
                    std::copy(t.begin(), t.end(), rec_src.begin() + static_cast<std::ptrdiff_t>(slot * m));
                });
            bytes.clear();
            bytes.reserve(in_block * table.record_bytes());
            for (std::uint64_t r = 0; r < in_block; ++r) {
                detail::put_u32(bytes, rec_j[r]);
                for (int i = 0; i < m; ++i) {
                    const GridIndex g = grid.index(rec_src[r * m + i]);
                    for (int k = 0; k < grid.dim(); ++k)
                        detail::put_u32(bytes, g[k]);
                }
                const GridIndex g = grid.index(rec_t[r]);
                for (int k = 0; k < grid.dim(); ++k)
                    detail::put_u32(bytes, g[k]);
            }
            out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
            if (!out)
                throw IoError("write failed on table file " + path);
        }
        lo = hi;
    }
    out.close();
    if (!out)
        throw IoError("write failed on table file " + path);
    return table;
}

/// Per-map lookup level -> quantize(ρ_j(level/255)).
using GreyTable = std::vector<std::array<std::uint8_t, 256>>;

inline GreyTable grey_tables(const SystemSpec& spec, std::uint64_t* clamps = nullptr) {
    GreyTable out(spec.grey.size());
    for (std::size_t j = 0; j < spec.grey.size(); ++j)
        for (int k = 0; k <= kLevels; ++k) {
            const GreyValue v = spec.grey[j].evaluate(level_value(static_cast<std::uint8_t>(k)));
            if (v.clamped && clamps)
                ++*clamps;
            out[j][k] = quantize(v.value);
        }
    return out;
}

/// v(x) = max_j ρ_j( max { min_i u(z_i) : (j, z, x) in Φ⁻¹ } ), sup ∅ = 0.
inline DiscreteFuzzySet generalized_fuzzy_step(const SystemSpec& spec, const InverseImageTable& table,
                                               const DiscreteFuzzySet& u, StepDiagnostics* diag = nullptr) {
    if (!spec.fuzzy())
        throw Error("fuzzy step needs grey maps");
    const TableHeader& h = table.header();
    if (h.maps != spec.maps.size() || h.arity != static_cast<std::uint32_t>(spec.arity) ||
        h.dim != static_cast<std::uint32_t>(spec.dim()) || !(table.grid() == u.grid))
        throw Error("inverse table does not match the system or the fuzzy set's net");
    if (!u.normal())
        throw Error("fuzzy step needs a normal fuzzy set");

    StepDiagnostics local;
    StepDiagnostics& d = diag ? *diag : local;
    const GreyTable lut = grey_tables(spec, &d.grey_clamps);
    const std::vector<std::uint8_t> dense = u.to_dense();
    const std::size_t L = spec.maps.size();

    std::vector<std::uint8_t> out(u.grid.size(), 0);
    std::vector<std::uint8_t> inner(L, 0);
    std::uint32_t current = UINT32_MAX;
    auto flush = [&] {
        if (current == UINT32_MAX)
            return;
        std::uint8_t v = 0;
        for (std::size_t j = 0; j < L; ++j) {
            v = std::max(v, lut[j][inner[j]]);
            inner[j] = 0;
        }
        out[current] = v;
    };
    table.for_each_record([&](std::uint32_t target, std::uint32_t j, std::span<const std::uint32_t> src) {
        if (target != current) {
            flush();
            current = target;
        }
        std::uint8_t mn = 255;
        for (std::uint32_t z : src)
            mn = std::min(mn, dense[z]);
        std::uint8_t& slot = inner[j - 1];
        slot = std::max(slot, mn);
    });
    flush();
    return DiscreteFuzzySet::from_dense(u.grid, out);
}

/// Z(u)(x) = max_j ρ_j( max { u(z) : r(φ_j(z)) = x } ) for an arity-1 system.
inline DiscreteFuzzySet fuzzy_step(const SystemSpec& spec, const InverseImageTable& table, const DiscreteFuzzySet& u,
                                   StepDiagnostics* diag = nullptr) {
    if (spec.arity != 1)
        throw Error("fuzzy_step needs an arity-1 system");
    return generalized_fuzzy_step(spec, table, u, diag);
}

} // namespace fuzzyifs
