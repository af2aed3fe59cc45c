#include "stegsage/train.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "stegsage/common.hpp"
#include "stegsage/nn.hpp"
#include "stegsage/optim.hpp"

namespace stegsage {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

template <typename T>
T parse_number(const std::string& value, const std::string& key) {
    T v{};
    auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc{} || p != value.data() + value.size())
        throw ValidationError("config key '" + key + "' has a bad value: '" + value + "'");
    return v;
}

}  // namespace

TrainConfig parse_train_config_text(const std::string& text) {
    std::vector<std::pair<std::string, std::string>> kvs;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ValidationError("config line " + std::to_string(lineno) + " is not key=value: '" +
                                  line + "'");
        kvs.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }

    TrainConfig cfg;
    // the variant resets the model layout, so it applies before the
    // model-shape keys regardless of file order
    for (const auto& [key, value] : kvs)
        if (key == "variant") cfg.model = variant_config(parse_number<int>(value, key));
    for (const auto& [key, value] : kvs) {
        if (key == "variant") continue;
        if (key == "lr") cfg.lr = parse_number<double>(value, key);
        else if (key == "batch") cfg.batch = parse_number<int>(value, key);
        else if (key == "epochs") cfg.epochs = parse_number<int>(value, key);
        else if (key == "dropout") cfg.dropout = parse_number<double>(value, key);
        else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(value, key);
        else if (key == "report_every") cfg.report_every = parse_number<int>(value, key);
        else if (key == "hidden") cfg.model.hidden = parse_number<int>(value, key);
        else if (key == "model_seed") cfg.model.seed = parse_number<std::uint64_t>(value, key);
        else throw ValidationError("unknown config key '" + key + "'");
    }
    cfg.validate();
    return cfg;
}

TrainConfig parse_train_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config: " + path);
    std::ostringstream buf;
    buf << f.rdbuf();
    return parse_train_config_text(buf.str());
}

void TrainConfig::validate() const {
    if (!(lr > 0.0) || !std::isfinite(lr)) throw ValidationError("lr must be positive");
    if (batch < 1) throw ValidationError("batch must be >= 1");
    if (epochs < 0) throw ValidationError("epochs must be >= 0");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ValidationError("dropout must be in [0, 1)");
    if (report_every < 1) throw ValidationError("report_every must be >= 1");
    model.validate();
}

TrainResult train(const std::vector<StreamGraph>& train_graphs,
                  const std::vector<StreamGraph>& val_graphs, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
    cfg.validate();
    if (train_graphs.empty()) throw ValidationError("train split is empty");
    if (val_graphs.empty()) throw ValidationError("val split is empty");

    ModelConfig mc = cfg.model;
    mc.dropout_p = cfg.dropout;
    TrainResult result;
    result.final_state = init_model(mc);
    result.best_state = result.final_state;
    ModelState& st = result.final_state;

    const int n = static_cast<int>(train_graphs.size());
    double best_acc = -1.0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle_rng(derive_seed(cfg.seed, 0xE90C4, epoch));
        const std::vector<int> order = shuffle_rng.permutation(n);
        double loss_sum = 0.0;
        for (int lo = 0, batch_idx = 0; lo < n; lo += cfg.batch, ++batch_idx) {
            const int hi = std::min(n, lo + cfg.batch);
            std::vector<StreamGraph> slice;
            slice.reserve(hi - lo);
            for (int r = lo; r < hi; ++r) slice.push_back(train_graphs[order[r]]);
            GraphBatch batch = batch_graphs(slice);

            ForwardTrace tr =
                model_forward(batch, st, Mode::train, derive_seed(cfg.seed, 0xBA7C4, epoch, batch_idx));
            Tensor2 dlogits;
            const double loss = softmax_cross_entropy(tr.logits, batch.labels, &dlogits);
            if (!std::isfinite(loss))
                throw NumericError("training diverged: non-finite loss at epoch " +
                                   std::to_string(epoch) + ", batch " + std::to_string(batch_idx));
            loss_sum += loss * (hi - lo);

            GradBundle grads = model_backward(batch, st, tr, dlogits);
            adam_step(st.params, grads, cfg.lr);
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = loss_sum / n;
        stats.val_accuracy = evaluate(st, val_graphs).accuracy;
        result.history.push_back(stats);
        if (stats.val_accuracy > best_acc) {
            best_acc = stats.val_accuracy;
            result.best_state = st;
            result.best_epoch = epoch;
        }
        if (on_epoch && (epoch % cfg.report_every == 0 || epoch == cfg.epochs - 1)) on_epoch(stats);
    }
    return result;
}

TrainResult train(const DatasetManifest& manifest, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
    return train(load_split(manifest, Split::train), load_split(manifest, Split::val), cfg,
                 on_epoch);
}

}  // namespace stegsage
