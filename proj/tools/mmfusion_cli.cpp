#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "mmf/data_synth.hpp"
#include "mmf/embedding.hpp"
#include "mmf/model.hpp"
#include "mmf/model_gradcheck.hpp"
#include "mmf/tensor_io.hpp"
#include "mmf/train.hpp"

namespace fs = std::filesystem;
using namespace mmf;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct GenDataArgs {
    std::string out;
    int per_class = 50;
    int64_t image_size = 32;
    uint64_t seed = 0;
    double signal = 0.8;
    double noise = 0.1;
};

int cmd_gen_data(const GenDataArgs& a) {
    SyntheticConfig cfg;
    cfg.per_class = a.per_class;
    cfg.image_size = a.image_size;
    cfg.seed = a.seed;
    cfg.signal_strength = a.signal;
    cfg.noise_sigma = a.noise;
    auto manifest = generate(cfg, a.out);
    const auto counts = manifest.class_counts();
    std::cout << "wrote " << manifest.entries.size() << " subjects to " << a.out << " (";
    for (size_t c = 0; c < 4; ++c) {
        if (c) std::cout << ", ";
        std::cout << kClassNames[c] << "=" << counts[c];
    }
    std::cout << ")\n";
    return kExitOk;
}

struct EmbedArgs {
    std::string data;
    std::string provider = "mock";
    int shots = 5;
    std::string cache;
    std::string url;
    std::string llm_model = "gpt-4";
    std::string model_path;  // optional checkpoint for image summaries
};

// Stage-1 pooled image features, rounded for the prompt.
std::vector<double> summary_for(const ModelParams& params, const ModelConfig& cfg,
                                const Tensor& mri, const Tensor& pet) {
    auto& p = const_cast<ModelParams&>(params);
    auto mri_tokens =
        positional_encode(encode_image(ad::constant(mri), p.mri_encoder, cfg.encoder), p.pos_table);
    auto pet_tokens =
        positional_encode(encode_image(ad::constant(pet), p.pet_encoder, cfg.encoder), p.pos_table);
    auto fused = cross_attend_concat(mri_tokens, pet_tokens, p.fuse1);
    return image_summary(fused.pooled->value, 8);
}

int cmd_embed(const EmbedArgs& a) {
    auto manifest = load_manifest(a.data);
    PromptSpec spec;
    spec.shots = a.shots;
    ShotBank bank = load_shot_bank(fs::path(a.data) / "shotbank.jsonl");

    std::unique_ptr<EmbeddingProvider> provider;
    if (a.provider == "mock") {
        provider = std::make_unique<MockProvider>();
    } else {
        HttpProviderConfig hc;
        hc.url = a.url;
        hc.model = a.llm_model;
        hc.api_key = std::getenv("MM_LLM_API_KEY") ? std::getenv("MM_LLM_API_KEY") : "";
        provider = std::make_unique<HttpProvider>(hc);
    }

    std::optional<std::pair<ModelParams, ModelConfig>> model;
    if (!a.model_path.empty()) model = load_model(a.model_path);

    TokenCache cache(a.cache);
    Embedder embedder(*provider, cache);

    std::vector<TokenFileEntry> tokens;
    std::vector<std::string> failed;
    for (const auto& e : manifest.entries) {
        std::optional<std::vector<double>> summary;
        if (model) {
            summary = summary_for(model->first, model->second,
                                  read_tensor(fs::path(a.data) / e.mri_path),
                                  read_tensor(fs::path(a.data) / e.pet_path));
        }
        try {
            TokenFileEntry t;
            t.id = e.id;
            t.provider = provider->name();
            t.shots = spec.shots;
            t.token = embedder.embed(e.record, summary, spec, bank);
            tokens.push_back(std::move(t));
        } catch (const error& ex) {
            std::cerr << "embed failed for " << e.id << ": " << ex.what() << "\n";
            failed.push_back(e.id);
        }
    }
    save_tokens(fs::path(a.data) / "tokens.jsonl", tokens);
    const auto stats = embedder.stats();
    std::cout << "embedded " << tokens.size() << "/" << manifest.entries.size() << " subjects ("
              << stats.provider_calls << " provider calls, " << stats.cache_hits
              << " cache hits)\n";
    if (!failed.empty()) {
        std::cerr << "failed subjects:";
        for (const auto& id : failed) std::cerr << " " << id;
        std::cerr << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}

struct TrainArgs {
    std::string data;
    std::string task;
    int epochs = 50;
    double lr = 0.05;
    int batch = 8;
    uint64_t seed = 0;
    std::string out;
    int64_t d_model = 32;
    int heads = 2;
    std::string pos_mode = "sum";
};

int cmd_train(const TrainArgs& a) {
    auto manifest = load_manifest(a.data);
    auto tokens = load_tokens(fs::path(a.data) / "tokens.jsonl");
    auto samples = load_samples(a.data, manifest, tokens);

    Task task = Task::by_name(a.task);
    ModelConfig cfg;
    cfg.num_classes = task.num_classes;
    cfg.d_model = a.d_model;
    cfg.heads = a.heads;
    cfg.pos_mode = pos_mode_from_name(a.pos_mode);
    cfg.encoder.channels = a.d_model;
    cfg.encoder.image_size = samples.front().mri.shape[1];
    cfg.validate();

    auto splits = split(manifest, {}, a.seed);
    std::vector<Sample> train_samples;
    for (const auto& e : splits.train.entries) {
        for (auto& s : samples) {
            if (s.id == e.id) {
                train_samples.push_back(s);
                break;
            }
        }
    }

    ModelParams params = init_model(cfg, a.seed);
    Hyperparams hyper{a.epochs, a.lr, a.batch, a.seed};
    train(params, cfg, train_samples, task, hyper, [](const EpochLog& log) {
        std::cout << "epoch " << log.epoch << ": loss " << log.loss << ", train acc "
                  << log.train_acc << "\n";
        return true;
    });
    save_model(params, cfg, a.out);
    std::cout << "saved model to " << a.out << "\n";
    return kExitOk;
}

struct EvalArgs {
    std::string model;
    std::string data;
    std::string task;
    std::string json_out;
    std::string split_name = "test";
    uint64_t seed = 0;
};

int cmd_eval(const EvalArgs& a) {
    auto [params, cfg] = load_model(a.model);
    Task task = Task::by_name(a.task);
    if (cfg.num_classes != task.num_classes) {
        throw evaluation_error("model has " + std::to_string(cfg.num_classes) +
                               " classes but task " + a.task + " needs " +
                               std::to_string(task.num_classes));
    }
    auto manifest = load_manifest(a.data);
    auto tokens = load_tokens(fs::path(a.data) / "tokens.jsonl");

    auto splits = split(manifest, {}, a.seed);
    const DatasetManifest* part = &splits.test;
    if (a.split_name == "train") part = &splits.train;
    if (a.split_name == "val") part = &splits.val;
    auto samples = load_samples(a.data, *part, tokens);

    Metrics m = evaluate(params, cfg, samples, task);
    ReportEntry entry{a.task, tokens.empty() ? "unknown" : tokens.front().provider,
                      tokens.empty() ? 0 : tokens.front().shots, m};
    Report rep = report({entry});
    std::cout << rep.text;
    if (!a.json_out.empty()) {
        std::ofstream out(a.json_out, std::ios::trunc);
        if (!out.is_open()) throw io_error("cannot write " + a.json_out);
        out << rep.json << "\n";
    }
    return kExitOk;
}

int cmd_gradcheck(uint64_t seed, bool inject_fault) {
    auto result = run_model_gradcheck(seed, inject_fault);
    std::cout << "gradcheck: max relative error " << result.max_rel_err << " at "
              << result.worst_param << " (" << result.coords_checked << " coordinates, "
              << result.seconds << "s)\n";
    if (result.max_rel_err >= 1e-3) {
        std::cerr << "gradcheck FAILED: worst parameter " << result.worst_param << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-modal fusion classification toolkit"};
    app.require_subcommand(1);

    auto add_config = [](CLI::App* cmd) {
        cmd->set_config("--config", "", "key = value config file; flags override it");
        cmd->allow_config_extras(CLI::config_extras_mode::error);
    };

    GenDataArgs gen;
    auto* cmd_gen = app.add_subcommand("gen-data", "Generate a synthetic dataset");
    cmd_gen->add_option("--out", gen.out, "output directory")->required();
    cmd_gen->add_option("--per-class", gen.per_class, "subjects per class");
    cmd_gen->add_option("--image-size", gen.image_size, "square image size");
    cmd_gen->add_option("--seed", gen.seed, "dataset seed");
    cmd_gen->add_option("--signal", gen.signal, "planted signal strength in [0,1]");
    cmd_gen->add_option("--noise", gen.noise, "image noise sigma");
    add_config(cmd_gen);

    EmbedArgs embed;
    auto* cmd_emb = app.add_subcommand("embed", "Embed non-image records through a provider");
    cmd_emb->add_option("--data", embed.data, "dataset directory")->required();
    cmd_emb->add_option("--provider", embed.provider, "embedding provider")
        ->check(CLI::IsMember({"mock", "http"}));
    cmd_emb->add_option("--shots", embed.shots, "worked examples in the prompt")
        ->check(CLI::IsMember({0, 1, 5}));
    cmd_emb->add_option("--cache", embed.cache, "token cache file")->required();
    cmd_emb->add_option("--url", embed.url, "provider endpoint (http provider)");
    cmd_emb->add_option("--llm-model", embed.llm_model, "model name sent to the http provider");
    cmd_emb->add_option("--model", embed.model_path,
                        "model checkpoint used to compute image summaries; omit for record-only "
                        "prompts");
    add_config(cmd_emb);

    TrainArgs train_args;
    auto* cmd_tr = app.add_subcommand("train", "Train a classifier on the train split");
    cmd_tr->add_option("--data", train_args.data, "dataset directory")->required();
    cmd_tr->add_option("--task", train_args.task, "classification task")
        ->required()
        ->check(CLI::IsMember(Task::names()));
    cmd_tr->add_option("--epochs", train_args.epochs, "training epochs");
    cmd_tr->add_option("--lr", train_args.lr, "SGD learning rate");
    cmd_tr->add_option("--batch", train_args.batch, "minibatch size");
    cmd_tr->add_option("--seed", train_args.seed, "split/shuffle/init seed");
    cmd_tr->add_option("--out", train_args.out, "model output file")->required();
    cmd_tr->add_option("--d-model", train_args.d_model, "model width");
    cmd_tr->add_option("--heads", train_args.heads, "attention heads");
    cmd_tr->add_option("--pos-mode", train_args.pos_mode, "positional encoding mode")
        ->check(CLI::IsMember({"sum", "concat"}));
    add_config(cmd_tr);

    EvalArgs eval_args;
    auto* cmd_ev = app.add_subcommand("eval", "Evaluate a trained model");
    cmd_ev->add_option("--model", eval_args.model, "model checkpoint")->required();
    cmd_ev->add_option("--data", eval_args.data, "dataset directory")->required();
    cmd_ev->add_option("--task", eval_args.task, "classification task")
        ->required()
        ->check(CLI::IsMember(Task::names()));
    cmd_ev->add_option("--json", eval_args.json_out, "JSON report output path");
    cmd_ev->add_option("--split", eval_args.split_name, "which split to evaluate")
        ->check(CLI::IsMember({"train", "val", "test"}));
    cmd_ev->add_option("--seed", eval_args.seed, "split seed (must match training)");
    add_config(cmd_ev);

    uint64_t gc_seed = 0;
    bool gc_fault = false;
    auto* cmd_gc = app.add_subcommand("gradcheck", "Finite-difference check of the full model");
    cmd_gc->add_option("--seed", gc_seed, "parameter/input seed");
    cmd_gc->add_flag("--inject-fault", gc_fault, "corrupt one gradient (test fixture)")
        ->group("");  // hidden
    add_config(cmd_gc);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (cmd_gen->parsed()) return cmd_gen_data(gen);
        if (cmd_emb->parsed()) {
            // http misconfiguration is a usage problem; fail before any call.
            if (embed.provider == "http") {
                if (embed.url.empty()) {
                    std::cerr << "--provider http requires --url\n";
                    return kExitUsage;
                }
                if (!std::getenv("MM_LLM_API_KEY") ||
                    std::string(std::getenv("MM_LLM_API_KEY")).empty()) {
                    std::cerr << "--provider http requires MM_LLM_API_KEY in the environment\n";
                    return kExitUsage;
                }
            }
            return cmd_embed(embed);
        }
        if (cmd_tr->parsed()) return cmd_train(train_args);
        if (cmd_ev->parsed()) return cmd_eval(eval_args);
        if (cmd_gc->parsed()) return cmd_gradcheck(gc_seed, gc_fault);
    } catch (const error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}
