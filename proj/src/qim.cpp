#include "stegsage/qim.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "stegsage/digest.hpp"

namespace stegsage {

namespace {

// Nearest neighbor of each member of `subset` within the subset itself,
// squared Euclidean distance, ties to the lowest codeword index.
std::vector<int> subset_nearest(const Codebook& book, const std::vector<int>& subset) {
    std::vector<int> nn(subset.size(), -1);
    for (size_t a = 0; a < subset.size(); ++a) {
        double best = std::numeric_limits<double>::infinity();
        for (size_t b = 0; b < subset.size(); ++b) {
            if (a == b) continue;
            double d2 = 0.0;
            for (int d = 0; d < book.dim; ++d) {
                const double diff = book.vectors(subset[a], d) - book.vectors(subset[b], d);
                d2 += diff * diff;
            }
            if (d2 < best) {
                best = d2;
                nn[a] = static_cast<int>(b);  // position within subset
            }
        }
    }
    return nn;
}

// Chooses s_c in {+1,-1} per component minimizing |sum s_c * diff_c|.
// Small instances are solved exactly by a reachable-sum table, so an
// "unbalanceable" verdict is a proof, not a search failure; oversized
// instances fall back to greedy descent with seeded restarts.
long long balance_signs(const std::vector<int>& diff, Rng& rng, std::vector<int>& sign) {
    const int m = static_cast<int>(diff.size());
    int span = 0;
    for (int d : diff) span += std::abs(d);
    const int width = 2 * span + 1;

    if (static_cast<long long>(m + 1) * width <= (1LL << 26)) {
        // reach[j][s + span] = sum s attainable with components j..m-1
        std::vector<std::vector<char>> reach(m + 1, std::vector<char>(width, 0));
        reach[m][span] = 1;
        for (int j = m - 1; j >= 0; --j)
            for (int s = 0; s < width; ++s)
                if (reach[j + 1][s]) {
                    reach[j][s + diff[j]] = 1;
                    reach[j][s - diff[j]] = 1;
                }
        int best = -1;  // offset form; span == sum 0
        for (int s = 0; s < width; ++s)
            if (reach[0][s] && (best == -1 || std::abs(s - span) < std::abs(best - span)))
                best = s;
        // walk forward, preferring +1 at every step, so the choice is canonical
        long long target = best - span;
        for (int j = 0; j < m; ++j) {
            const long long rest = target - diff[j];
            if (std::llabs(rest) <= span && reach[j + 1][rest + span]) {
                sign[j] = 1;
                target = rest;
            } else {
                sign[j] = -1;
                target += diff[j];
            }
        }
        return best - span;
    }

    std::vector<int> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return std::abs(diff[a]) > std::abs(diff[b]); });
    long long sum = 0;
    for (int c : order) {
        sign[c] = (sum > 0) == (diff[c] > 0) && diff[c] != 0 ? -1 : 1;
        sum += sign[c] * diff[c];
    }
    const long long cap = 10LL * m + 100;
    for (long long iter = 0; std::llabs(sum) > 1 && iter < cap; ++iter) {
        bool improved = false;
        for (int c = 0; c < m && std::llabs(sum) > 1; ++c) {
            const long long cand = sum - 2LL * sign[c] * diff[c];
            if (std::llabs(cand) < std::llabs(sum)) {
                sign[c] = -sign[c];
                sum = cand;
                improved = true;
            }
        }
        for (int a = 0; a < m && std::llabs(sum) > 1; ++a)
            for (int b = a + 1; b < m && std::llabs(sum) > 1; ++b) {
                const long long cand = sum - 2LL * sign[a] * diff[a] - 2LL * sign[b] * diff[b];
                if (std::llabs(cand) < std::llabs(sum)) {
                    sign[a] = -sign[a];
                    sign[b] = -sign[b];
                    sum = cand;
                    improved = true;
                }
            }
        if (!improved) {
            for (int c = 0; c < m; ++c) sign[c] = rng.bernoulli(0.5) ? 1 : -1;
            sum = 0;
            for (int c = 0; c < m; ++c) sum += sign[c] * diff[c];
        }
    }
    return sum;
}

// One complementary-nearest-neighbor split of `subset` into two halves.
// Color constraints form a forest (every cycle in the nearest-neighbor
// map is mutual under lowest-index ties), so per-component colorings are
// forced up to a flip; balance is restored by flipping whole components.
void cnv_split(const Codebook& book, const std::vector<int>& subset, Rng& rng,
               std::vector<int>& out_a, std::vector<int>& out_b) {
    const int n = static_cast<int>(subset.size());
    if (n < 2) throw ValidationError("cnv partition: cannot split fewer than 2 codewords");

    const std::vector<int> nn = subset_nearest(book, subset);

    // adjacency of the undirected constraint graph, positions within subset
    std::vector<std::vector<int>> adj(n);
    for (int a = 0; a < n; ++a) {
        adj[a].push_back(nn[a]);
        adj[nn[a]].push_back(a);
    }

    std::vector<int> color(n, -1), comp(n, -1);
    std::vector<std::array<int, 2>> comp_counts;
    for (int start = 0; start < n; ++start) {
        if (color[start] != -1) continue;
        const int c = static_cast<int>(comp_counts.size());
        comp_counts.push_back({0, 0});
        std::vector<int> stack{start};
        color[start] = 0;
        comp[start] = c;
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            comp_counts[c][color[u]] += 1;
            for (int v : adj[u]) {
                if (color[v] == -1) {
                    color[v] = 1 - color[u];
                    comp[v] = c;
                    stack.push_back(v);
                } else if (color[v] == color[u]) {
                    throw ValidationError("cnv partition: odd constraint cycle");
                }
            }
        }
    }

    // Pick a flip sign per component so the two halves balance within 1.
    const int m = static_cast<int>(comp_counts.size());
    std::vector<int> diff(m);
    for (int c = 0; c < m; ++c) diff[c] = comp_counts[c][0] - comp_counts[c][1];
    std::vector<int> sign(m, 1);
    const long long sum = balance_signs(diff, rng, sign);
    if (std::llabs(sum) > 1)
        throw ValidationError(
            "cnv partition: cannot balance parts within 1 without breaking complementarity (" +
            std::to_string(n) + " codewords, best achievable imbalance " +
            std::to_string(std::llabs(sum)) + ")");

    out_a.clear();
    out_b.clear();
    for (int a = 0; a < n; ++a) {
        const int side = sign[comp[a]] == 1 ? color[a] : 1 - color[a];
        (side == 0 ? out_a : out_b).push_back(subset[a]);
    }
    // canonical orientation: the half holding the lowest index comes first
    if (!out_b.empty() && (out_a.empty() || out_b.front() < out_a.front())) std::swap(out_a, out_b);

    // the constraint the whole construction exists for; never trust, always check
    for (int a = 0; a < n; ++a) {
        const bool a_in_first = std::binary_search(out_a.begin(), out_a.end(), subset[a]);
        const bool nn_in_first = std::binary_search(out_a.begin(), out_a.end(), subset[nn[a]]);
        if (a_in_first == nn_in_first)
            throw ValidationError("cnv partition: complementarity violated after balancing");
    }
}

void split_recursive(const Codebook& book, const std::vector<int>& subset, int depth, int n_bits,
                     int prefix, Rng& rng, std::vector<int>& assignment) {
    if (depth == n_bits) {
        for (int idx : subset) assignment[idx] = prefix;
        return;
    }
    std::vector<int> a, b;
    cnv_split(book, subset, rng, a, b);
    split_recursive(book, a, depth + 1, n_bits, prefix * 2, rng, assignment);
    split_recursive(book, b, depth + 1, n_bits, prefix * 2 + 1, rng, assignment);
}

}  // namespace

void CodebookPartition::validate(const CodebookSet& codebooks) const {
    if (n_bits < 1) throw ValidationError("partition: n_bits must be >= 1");
    const int nparts = part_count();
    for (int i = 0; i < 3; ++i) {
        const Codebook& book = codebooks.books[i];
        const int size = book.size();
        if (static_cast<int>(assignment[i].size()) != size)
            throw ValidationError("partition: assignment size mismatch");
        if (static_cast<int>(parts[i].size()) != nparts)
            throw ValidationError("partition: wrong part count");

        std::vector<int> seen(size, 0);
        int min_size = size + 1, max_size = 0;
        for (int p = 0; p < nparts; ++p) {
            const auto& members = parts[i][p];
            min_size = std::min(min_size, static_cast<int>(members.size()));
            max_size = std::max(max_size, static_cast<int>(members.size()));
            for (int idx : members) {
                if (idx < 0 || idx >= size) throw ValidationError("partition: index out of range");
                if (seen[idx]++) throw ValidationError("partition: parts are not disjoint");
                if (assignment[i][idx] != p)
                    throw ValidationError("partition: assignment disagrees with parts");
            }
        }
        for (int idx = 0; idx < size; ++idx)
            if (!seen[idx]) throw ValidationError("partition: parts are not exhaustive");
        if (max_size - min_size > 1) throw ValidationError("partition: parts are not balanced");

        if (n_bits == 1) {
            std::vector<int> all(size);
            std::iota(all.begin(), all.end(), 0);
            const std::vector<int> nn = subset_nearest(book, all);
            for (int idx = 0; idx < size; ++idx)
                if (assignment[i][idx] == assignment[i][nn[idx]])
                    throw ValidationError(
                        "partition: nearest neighbor of codeword " + std::to_string(idx) +
                        " is not in the complementary part");
        }
    }
}

CodebookPartition cnv_partition(const CodebookSet& codebooks, int n_bits, std::uint64_t seed) {
    if (n_bits < 1) throw ValidationError("cnv_partition: n_bits must be >= 1");
    codebooks.validate();

    CodebookPartition out;
    out.n_bits = n_bits;
    const int nparts = out.part_count();
    for (int i = 0; i < 3; ++i) {
        const Codebook& book = codebooks.books[i];
        if (book.size() < nparts)
            throw ValidationError("cnv_partition: codebook " + std::to_string(i + 1) + " has " +
                                  std::to_string(book.size()) + " codewords, need at least " +
                                  std::to_string(nparts));
        Rng rng(derive_seed(seed, 0xC2BF, static_cast<std::uint64_t>(i)));
        std::vector<int> all(book.size());
        std::iota(all.begin(), all.end(), 0);
        out.assignment[i].assign(book.size(), -1);
        split_recursive(book, all, 0, n_bits, 0, rng, out.assignment[i]);

        out.parts[i].assign(nparts, {});
        for (int idx = 0; idx < book.size(); ++idx)
            out.parts[i][out.assignment[i][idx]].push_back(idx);
    }
    out.validate(codebooks);
    return out;
}

int EmbedPlan::selected_count() const {
    int n = 0;
    for (std::uint8_t s : selected) n += s != 0;
    return n;
}

std::string EmbedPlan::mask_digest() const { return sha256_hex(selected); }

StegoStream qim_embed(const LatentSequence& latents, const CodebookSet& codebooks,
                      const CodebookPartition& partition, double rate,
                      std::uint64_t payload_seed) {
    if (!(rate > 0.0 && rate <= 1.0)) throw ValidationError("qim_embed: rate must be in (0, 1]");
    partition.validate(codebooks);
    const int T = latents.T();
    for (int i = 0; i < 3; ++i)
        if (latents.coords[i].cols != codebooks.books[i].dim)
            throw ValidationError("qim_embed: latent dim does not match codebook dim");

    StegoStream s;
    s.label = 1;
    s.plan.rate = rate;
    s.plan.bits_per_frame = 3 * partition.n_bits;
    s.plan.seed = payload_seed;
    s.plan.selected.resize(T);

    Rng select_rng(derive_seed(payload_seed, 0x5E1EC7ED));
    for (int t = 0; t < T; ++t) s.plan.selected[t] = select_rng.bernoulli(rate) ? 1 : 0;

    Rng bits_rng(derive_seed(payload_seed, 0xB175));
    const int total_bits = s.plan.selected_count() * s.plan.bits_per_frame;
    s.plan.payload.resize(total_bits);
    for (int b = 0; b < total_bits; ++b)
        s.plan.payload[b] = static_cast<std::uint8_t>(bits_rng.uniform_int(2));

    std::array<std::uint16_t, 3> sizes{};
    for (int i = 0; i < 3; ++i) sizes[i] = static_cast<std::uint16_t>(codebooks.books[i].size());
    s.qis = QisMatrix(sizes, T, latents.frame_duration_ms);

    size_t bit_pos = 0;
    for (int t = 0; t < T; ++t) {
        for (int i = 0; i < 3; ++i) {
            const Codebook& book = codebooks.books[i];
            const double* point = latents.coords[i].row_ptr(t);
            if (s.plan.selected[t]) {
                int part_id = 0;
                for (int b = 0; b < partition.n_bits; ++b)
                    part_id = part_id * 2 + s.plan.payload[bit_pos++];
                s.qis.at(i, t) = static_cast<std::uint16_t>(
                    nearest_index(book, point, &partition.parts[i][part_id]));
            } else {
                s.qis.at(i, t) = static_cast<std::uint16_t>(nearest_index(book, point));
            }
        }
    }
    return s;
}

std::vector<std::uint8_t> qim_extract(const StegoStream& s, const CodebookPartition& partition) {
    if (static_cast<int>(s.plan.selected.size()) != s.qis.T)
        throw ValidationError("qim_extract: selection mask length does not match stream");
    std::vector<std::uint8_t> bits;
    bits.reserve(s.plan.payload.size());
    for (int t = 0; t < s.qis.T; ++t) {
        if (!s.plan.selected[t]) continue;
        for (int i = 0; i < 3; ++i) {
            const int idx = s.qis.at(i, t);
            if (idx >= static_cast<int>(partition.assignment[i].size()))
                throw ValidationError("qim_extract: index " + std::to_string(idx) +
                                      " not found in partition assignment");
            const int part_id = partition.assignment[i][idx];
            for (int b = partition.n_bits - 1; b >= 0; --b)
                bits.push_back(static_cast<std::uint8_t>((part_id >> b) & 1));
        }
    }
    return bits;
}

}  // namespace stegsage
