#include "mmf/train.hpp"

#include <algorithm>
#include <cmath>

#include "mmf/rng.hpp"
#include "mmf/tensor_io.hpp"

namespace mmf {

namespace {

const std::vector<std::string> kTaskNames = {"ad-nc", "ad-emci", "lmci-nc",
                                             "emci-lmci", "3way", "4way"};

}  // namespace

std::optional<int> Task::map(ClassLabel label) const {
    const int l = static_cast<int>(label);
    if (name == "ad-nc") {
        if (l == 0) return 0;
        if (l == 3) return 1;
        return std::nullopt;
    }
    if (name == "ad-emci") {
        if (l == 1) return 0;
        if (l == 3) return 1;
        return std::nullopt;
    }
    if (name == "lmci-nc") {
        if (l == 0) return 0;
        if (l == 2) return 1;
        return std::nullopt;
    }
    if (name == "emci-lmci") {
        if (l == 1) return 0;
        if (l == 2) return 1;
        return std::nullopt;
    }
    if (name == "3way") {
        // NC -> 0, MCI (EMCI or LMCI) -> 1, AD -> 2
        if (l == 0) return 0;
        if (l == 1 || l == 2) return 1;
        return 2;
    }
    return l;  // 4way
}

Task Task::by_name(const std::string& name) {
    if (std::find(kTaskNames.begin(), kTaskNames.end(), name) == kTaskNames.end()) {
        throw task_error("unknown task '" + name + "'");
    }
    Task t;
    t.name = name;
    t.num_classes = name == "3way" ? 3 : (name == "4way" ? 4 : 2);
    return t;
}

const std::vector<std::string>& Task::names() { return kTaskNames; }

std::vector<Sample> load_samples(const std::filesystem::path& dataset_dir,
                                 const DatasetManifest& manifest,
                                 const std::vector<TokenFileEntry>& tokens) {
    std::vector<Sample> samples;
    samples.reserve(manifest.entries.size());
    for (const auto& e : manifest.entries) {
        const TokenFileEntry* found = nullptr;
        for (const auto& t : tokens) {
            if (t.id == e.id) {
                found = &t;
                break;
            }
        }
        if (!found) {
            throw io_error("no embedded token for subject " + e.id +
                           "; run the embed step first");
        }
        Sample s;
        s.id = e.id;
        s.label = e.label;
        s.mri = read_tensor(dataset_dir / e.mri_path);
        s.pet = read_tensor(dataset_dir / e.pet_path);
        s.token = Tensor({1, 64});
        for (int i = 0; i < 64; ++i) {
            s.token.data[static_cast<size_t>(i)] =
                static_cast<float>(found->token.values[static_cast<size_t>(i)]);
        }
        samples.push_back(std::move(s));
    }
    return samples;
}

namespace {

struct TaskSample {
    const Sample* sample;
    int task_class;
};

std::vector<TaskSample> filter_for_task(const std::vector<Sample>& samples, const Task& task) {
    std::vector<TaskSample> out;
    for (const auto& s : samples) {
        if (auto c = task.map(s.label)) out.push_back({&s, *c});
    }
    return out;
}

void check_class_presence(const std::vector<TaskSample>& data, const Task& task, int min_count) {
    std::vector<int> counts(static_cast<size_t>(task.num_classes), 0);
    for (const auto& ts : data) ++counts[static_cast<size_t>(ts.task_class)];
    for (int c = 0; c < task.num_classes; ++c) {
        if (counts[static_cast<size_t>(c)] < min_count) {
            throw task_error("task " + task.name + " class " + std::to_string(c) + " has " +
                             std::to_string(counts[static_cast<size_t>(c)]) + " subjects, needs " +
                             std::to_string(min_count));
        }
    }
}

}  // namespace

std::vector<EpochLog> train(ModelParams& params, const ModelConfig& config,
                            const std::vector<Sample>& samples, const Task& task,
                            const Hyperparams& hyper,
                            const std::function<bool(const EpochLog&)>& on_epoch) {
    if (hyper.epochs < 1) throw config_error("epochs must be >= 1");
    if (!(hyper.lr >= 0.0)) throw config_error("lr must be non-negative");
    if (hyper.batch < 1) throw config_error("batch must be >= 1");
    if (config.num_classes != task.num_classes) {
        throw task_error("model has " + std::to_string(config.num_classes) +
                         " classes but task " + task.name + " needs " +
                         std::to_string(task.num_classes));
    }
    auto data = filter_for_task(samples, task);
    check_class_presence(data, task, 2);

    auto learned = named_params(params);
    std::vector<EpochLog> logs;

    std::vector<size_t> order(data.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
        // Epoch shuffle from the (epoch+1)-th stream value of the seed.
        Rng rng(splitmix64_at(hyper.seed, static_cast<uint64_t>(epoch) + 1));
        for (size_t i = order.size(); i > 1; --i) {
            const auto j = static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(i) - 1));
            std::swap(order[i - 1], order[j]);
        }

        double loss_sum = 0.0;
        int correct = 0;
        for (size_t start = 0; start < order.size(); start += static_cast<size_t>(hyper.batch)) {
            const size_t end = std::min(order.size(), start + static_cast<size_t>(hyper.batch));
            ad::Value batch_loss;
            for (size_t i = start; i < end; ++i) {
                const auto& ts = data[order[i]];
                auto logits = model_forward(ts.sample->mri, ts.sample->pet, ts.sample->token,
                                            params, config);
                if (predict(logits->value) == ts.task_class) ++correct;
                auto loss = ad::cross_entropy(logits, ts.task_class);
                loss_sum += static_cast<double>(loss->value.data[0]);
                batch_loss = batch_loss ? ad::add(batch_loss, loss) : loss;
            }
            batch_loss = ad::scale(batch_loss, 1.0 / static_cast<double>(end - start));
            ad::backward(batch_loss);
            for (auto& [name, p] : learned) {
                if (p->grad.data.empty()) continue;
                const auto lr = static_cast<float>(hyper.lr);
                for (int64_t k = 0; k < p->value.numel(); ++k) {
                    p->value.data[static_cast<size_t>(k)] -=
                        lr * p->grad.data[static_cast<size_t>(k)];
                }
                ad::zero_grad(p);
            }
        }

        EpochLog log;
        log.epoch = epoch + 1;
        log.loss = loss_sum / static_cast<double>(data.size());
        log.train_acc = static_cast<double>(correct) / static_cast<double>(data.size());
        logs.push_back(log);
        if (on_epoch && !on_epoch(log)) break;
    }
    return logs;
}

std::vector<double> softmax_probs(const Tensor& logits) {
    std::vector<double> p(static_cast<size_t>(logits.numel()));
    double mx = logits.data[0];
    for (float v : logits.data) mx = std::max(mx, static_cast<double>(v));
    double sum = 0.0;
    for (size_t i = 0; i < p.size(); ++i) {
        p[i] = std::exp(static_cast<double>(logits.data[i]) - mx);
        sum += p[i];
    }
    for (auto& v : p) v /= sum;
    return p;
}

Metrics evaluate(const ModelParams& params, const ModelConfig& config,
                 const std::vector<Sample>& samples, const Task& task) {
    if (config.num_classes != task.num_classes) {
        throw evaluation_error("model has " + std::to_string(config.num_classes) +
                               " classes but task " + task.name + " needs " +
                               std::to_string(task.num_classes));
    }
    auto data = filter_for_task(samples, task);
    if (data.empty()) throw evaluation_error("split holds no subjects for task " + task.name);

    std::vector<int> truth, pred;
    std::vector<double> scores;
    std::vector<int> bin_labels;
    for (const auto& ts : data) {
        auto logits =
            model_forward(ts.sample->mri, ts.sample->pet, ts.sample->token, params, config);
        truth.push_back(ts.task_class);
        pred.push_back(predict(logits->value));
        if (task.num_classes == 2) {
            scores.push_back(softmax_probs(logits->value)[1]);
            bin_labels.push_back(ts.task_class);
        }
    }
    Metrics m = metrics_from_pairs(truth, pred, task.num_classes);
    if (task.num_classes == 2) m.auc = roc_auc(scores, bin_labels);
    return m;
}

}  // namespace mmf
