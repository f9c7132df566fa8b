// SPDX-License-Identifier: Apache-2.0
#include "tntc/tntc.h"

#include <cstring>
#include <filesystem>
#include <sstream>
#include <string>

#include "json.hpp"
#include "tntc/checkpoint.hpp"
#include "tntc/config.hpp"
#include "tntc/encoders.hpp"
#include "tntc/errors.hpp"
#include "tntc/image_io.hpp"
#include "tntc/training.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

struct tntc_dataset {
  tntc::Dataset data;
};

struct tntc_model {
  explicit tntc_model(tntc::TwoStreamNetwork m) : net(std::move(m)) {}
  tntc::TwoStreamNetwork net;
};

namespace {

thread_local std::string g_last_error;

tntc_status fail(tntc_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

struct InvalidArgument : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Unavailable : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BufferTooSmall : std::runtime_error {
  BufferTooSmall(std::size_t capacity, std::size_t needed)
      : std::runtime_error("buffer holds " + std::to_string(capacity) + " values, " + std::to_string(needed) +
                           " needed") {}
};

// Runs `body` and translates every library exception into a status code.
template <typename F>
tntc_status guarded(F&& body) {
  try {
    body();
    return TNTC_OK;
  } catch (const InvalidArgument& e) {
    return fail(TNTC_ERR_INVALID_ARGUMENT, e.what());
  } catch (const Unavailable& e) {
    return fail(TNTC_ERR_UNAVAILABLE, e.what());
  } catch (const BufferTooSmall& e) {
    return fail(TNTC_ERR_BUFFER_TOO_SMALL, e.what());
  } catch (const tntc::ConfigError& e) {
    return fail(TNTC_ERR_CONFIG, e.what());
  } catch (const tntc::ParseError& e) {
    return fail(TNTC_ERR_PARSE, e.what());
  } catch (const tntc::SchemaError& e) {
    return fail(TNTC_ERR_SCHEMA, e.what());
  } catch (const tntc::StratificationError& e) {
    return fail(TNTC_ERR_STRATIFICATION, e.what());
  } catch (const tntc::ContractError& e) {
    return fail(TNTC_ERR_CONTRACT, e.what());
  } catch (const tntc::NumericError& e) {
    return fail(TNTC_ERR_NUMERIC, e.what());
  } catch (const tntc::IoError& e) {
    return fail(TNTC_ERR_IO, e.what());
  } catch (const json::exception& e) {
    return fail(TNTC_ERR_CONFIG, std::string("invalid JSON: ") + e.what());
  } catch (const fs::filesystem_error& e) {
    return fail(TNTC_ERR_IO, e.what());
  } catch (const std::bad_alloc&) {
    return fail(TNTC_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(TNTC_ERR_INTERNAL, e.what());
  }
}

template <typename T>
void require(const T* p, const char* name) {
  if (p == nullptr) throw InvalidArgument(std::string(name) + " must not be null");
}

char* dup_string(const std::string& s) {
  auto* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void emit(char** out, const json& j) { *out = dup_string(j.dump(2)); }

tntc::DataFormat parse_format(const char* format, const fs::path& path) {
  if (format == nullptr) return tntc::format_from_path(path);
  const std::string f = format;
  if (f == "csv") return tntc::DataFormat::csv;
  if (f == "binary") return tntc::DataFormat::binary;
  throw InvalidArgument("unknown dataset format '" + f + "' (expected csv or binary)");
}

const tntc::GaitSequence& sample_at(const tntc_dataset* data, std::size_t index) {
  require(data, "dataset");
  if (index >= data->data.size())
    throw InvalidArgument("sample index " + std::to_string(index) + " out of range (dataset has " +
                          std::to_string(data->data.size()) + " samples)");
  return data->data.samples[index];
}

tntc::RunConfig run_config(const char* config_json) {
  require(config_json, "config_json");
  return tntc::parse_run_config(json::parse(config_json), {}, false);
}

// Splits warning text written line by line into a JSON array.
json warning_lines(const std::ostringstream& os) {
  json out = json::array();
  std::istringstream in(os.str());
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) out.push_back(line);
  return out;
}

json epoch_json(const tntc::EpochRecord& r) {
  return {{"epoch", r.epoch}, {"lr", r.lr}, {"loss", r.loss}, {"train_acc", r.train_acc}};
}

json train_log_json(const tntc::TrainLog& log) {
  json epochs = json::array();
  for (const auto& r : log.epochs) epochs.push_back(epoch_json(r));
  return {{"epochs", epochs}, {"steps", log.steps}};
}

void notify(tntc_progress_fn progress, void* user, const json& event) {
  if (progress != nullptr) progress(event.dump().c_str(), user);
}

tntc::PreparedData prepare_single(const tntc_dataset* data, std::size_t index, int input_size) {
  tntc::Dataset one;
  one.add(sample_at(data, index));
  return tntc::prepare_inputs(one, input_size);
}

void write_hash(const std::string& hex, char out[41]) { std::memcpy(out, hex.c_str(), 41); }

}  // namespace

extern "C" {

const char* tntc_version(void) { return "1.0.0"; }

const char* tntc_last_error(void) { return g_last_error.c_str(); }

const char* tntc_status_name(tntc_status status) {
  switch (status) {
    case TNTC_OK: return "ok";
    case TNTC_ERR_INVALID_ARGUMENT: return "invalid argument";
    case TNTC_ERR_CONFIG: return "configuration error";
    case TNTC_ERR_PARSE: return "parse error";
    case TNTC_ERR_SCHEMA: return "schema error";
    case TNTC_ERR_STRATIFICATION: return "stratification error";
    case TNTC_ERR_CONTRACT: return "contract violation";
    case TNTC_ERR_NUMERIC: return "numerical error";
    case TNTC_ERR_IO: return "I/O error";
    case TNTC_ERR_UNAVAILABLE: return "unavailable";
    case TNTC_ERR_BUFFER_TOO_SMALL: return "buffer too small";
    case TNTC_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void tntc_string_free(char* str) { std::free(str); }

// ---------------------------------------------------------------- datasets

tntc_status tntc_dataset_load(const char* path, const char* format, tntc_dataset** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = nullptr;
    auto ds = std::make_unique<tntc_dataset>();
    ds->data = tntc::load_dataset(path, parse_format(format, path));
    *out = ds.release();
  });
}

tntc_status tntc_dataset_synthesize(int per_class, int frames, uint64_t seed, tntc_dataset** out) {
  return guarded([&] {
    require(out, "out");
    *out = nullptr;
    if (per_class <= 0) throw InvalidArgument("per_class must be positive");
    auto ds = std::make_unique<tntc_dataset>();
    ds->data = tntc::synthesize_dataset(per_class, frames, seed);
    *out = ds.release();
  });
}

tntc_status tntc_dataset_save(const tntc_dataset* data, const char* path, const char* format) {
  return guarded([&] {
    require(data, "dataset");
    require(path, "path");
    tntc::save_dataset(data->data, path, parse_format(format, path));
  });
}

void tntc_dataset_free(tntc_dataset* data) { delete data; }

size_t tntc_dataset_size(const tntc_dataset* data) { return data == nullptr ? 0 : data->data.size(); }

tntc_status tntc_dataset_sample(const tntc_dataset* data, size_t index, const char** id, int* label, int* frames) {
  return guarded([&] {
    const auto& s = sample_at(data, index);
    if (id) *id = s.id.c_str();
    if (label) *label = tntc::emotion_index(s.label);
    if (frames) *frames = s.frames();
  });
}

tntc_status tntc_dataset_find(const tntc_dataset* data, const char* id, size_t* index) {
  return guarded([&] {
    require(data, "dataset");
    require(id, "id");
    require(index, "index");
    for (std::size_t i = 0; i < data->data.size(); ++i)
      if (data->data.samples[i].id == id) {
        *index = i;
        return;
      }
    throw InvalidArgument(std::string("no sample with id '") + id + "'");
  });
}

tntc_status tntc_dataset_summary(const tntc_dataset* data, char** out) {
  return guarded([&] {
    require(data, "dataset");
    require(out, "out");
    json counts = json::object();
    for (int c = 0; c < tntc::kNumEmotions; ++c)
      counts[std::string(tntc::emotion_name(tntc::emotion_from_index(c)))] = data->data.class_counts[static_cast<std::size_t>(c)];
    const int joints = data->data.empty() ? 0 : data->data.samples.front().num_joints;
    emit(out, {{"size", data->data.size()}, {"joints", joints}, {"class_counts", counts}});
  });
}

// ---------------------------------------------------------------- encoding

tntc_status tntc_encode_sample(const tntc_dataset* data, size_t index, tntc_image_kind kind, int size, double* out,
                               size_t capacity, size_t* needed) {
  return guarded([&] {
    const auto padded = tntc::pad_by_duplication(sample_at(data, index));
    auto img = kind == TNTC_SJI ? tntc::encode_sji(padded) : tntc::encode_afi(padded);
    if (size < 0) throw InvalidArgument("size must be non-negative");
    if (size > 0) img = tntc::resize_bilinear(img, size, size);
    if (needed) *needed = img.pixels.size();
    if (out == nullptr) return;
    if (capacity < img.pixels.size()) throw BufferTooSmall(capacity, img.pixels.size());
    std::copy(img.pixels.begin(), img.pixels.end(), out);
  });
}

tntc_status tntc_export_encodings(const tntc_dataset* data, const char* dir, int png, char** result_json) {
  return guarded([&] {
    require(data, "dataset");
    require(dir, "dir");
    require(result_json, "result_json");
    const fs::path root(dir);
    fs::create_directories(root / "sji");
    fs::create_directories(root / "afi");
    if (png) fs::create_directories(root / "png");
    std::ostringstream warnings;
    json files = json::array();
    for (const auto& sample : data->data.samples) {
      const auto padded = tntc::pad_by_duplication(sample, tntc::kPaddedFrames, &warnings);
      auto sji = tntc::encode_sji(padded);
      auto afi = tntc::encode_afi(padded);
      sji.source_id = afi.source_id = sample.id;
      const std::string sji_rel = "sji/" + sample.id + ".tnti";
      const std::string afi_rel = "afi/" + sample.id + ".tnti";
      tntc::write_encoded_array(sji, root / sji_rel);
      tntc::write_encoded_array(afi, root / afi_rel);
      files.push_back(sji_rel);
      files.push_back(afi_rel);
      if (png) {
        const std::string sji_png = "png/" + sample.id + ".sji.png";
        const std::string afi_png = "png/" + sample.id + ".afi.png";
        tntc::write_png(tntc::quantize_encoded(sji), root / sji_png);
        tntc::write_png(tntc::quantize_encoded(afi), root / afi_png);
        files.push_back(sji_png);
        files.push_back(afi_png);
      }
    }
    emit(result_json, {{"files", files}, {"warnings", warning_lines(warnings)}});
  });
}

// ---------------------------------------------------------------- configuration

tntc_status tntc_config_resolve(const char* config_json, const uint64_t* seed, const char* profile,
                                int require_dataset, char** resolved_json) {
  return guarded([&] {
    require(config_json, "config_json");
    require(resolved_json, "resolved_json");
    json doc;
    try {
      doc = json::parse(config_json);
    } catch (const json::parse_error& e) {
      throw tntc::ConfigError(std::string("configuration is not valid JSON: ") + e.what());
    }
    tntc::ConfigOverrides overrides;
    if (seed) overrides.seed = *seed;
    if (profile) overrides.profile = tntc::parse_profile(profile);
    emit(resolved_json, tntc::to_json(tntc::parse_run_config(doc, overrides, require_dataset != 0)));
  });
}

// ---------------------------------------------------------------- models

tntc_status tntc_model_create(const char* config_json, tntc_model** out) {
  return guarded([&] {
    require(out, "out");
    *out = nullptr;
    const auto cfg = run_config(config_json);
    const auto& e = cfg.experiment;
    *out = new tntc_model(tntc::TwoStreamNetwork(e.network, e.train.ablation, e.train.seed));
  });
}

tntc_status tntc_model_load(const char* path, tntc_model** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = nullptr;
    *out = new tntc_model(tntc::load_checkpoint(path));
  });
}

tntc_status tntc_model_save(const tntc_model* model, const char* path, const char* extra_json) {
  return guarded([&] {
    require(model, "model");
    require(path, "path");
    const json extra = extra_json ? json::parse(extra_json) : json();
    tntc::save_checkpoint(const_cast<tntc_model*>(model)->net, path, extra);
  });
}

void tntc_model_free(tntc_model* model) { delete model; }

tntc_status tntc_model_info(const tntc_model* model, char** out) {
  return guarded([&] {
    require(model, "model");
    require(out, "out");
    auto& net = const_cast<tntc_model*>(model)->net;
    std::size_t count = 0;
    for (const auto& p : net.parameters()) count += p.param->value.size();
    json levels = json::array();
    for (int l = 1; l <= tntc::kNumLevels; ++l)
      if (net.ablation().tcm_at(l)) levels.push_back(l);
    emit(out, {{"ablation", net.ablation().name()},
               {"seed", net.seed()},
               {"network", tntc::to_json(net.config())},
               {"parameters", count},
               {"tcm_levels", levels}});
  });
}

tntc_status tntc_model_train(tntc_model* model, const tntc_dataset* data, const char* config_json,
                             tntc_progress_fn progress, void* user, char** log_json) {
  return guarded([&] {
    require(model, "model");
    require(data, "dataset");
    require(log_json, "log_json");
    const auto cfg = run_config(config_json);
    std::ostringstream warnings;
    const auto prepared = tntc::prepare_inputs(data->data, model->net.config().backbone.input_size, &warnings);
    const auto log = tntc::train(model->net, prepared, {}, cfg.experiment.train, cfg.experiment.max_steps,
                                 [&](const tntc::EpochRecord& r) {
                                   auto ev = epoch_json(r);
                                   ev["event"] = "epoch";
                                   notify(progress, user, ev);
                                 });
    auto out = train_log_json(log);
    out["warnings"] = warning_lines(warnings);
    emit(log_json, out);
  });
}

tntc_status tntc_model_evaluate(tntc_model* model, const tntc_dataset* data, char** result_json) {
  return guarded([&] {
    require(model, "model");
    require(data, "dataset");
    require(result_json, "result_json");
    std::ostringstream warnings;
    const auto prepared = tntc::prepare_inputs(data->data, model->net.config().backbone.input_size, &warnings);
    const auto probs = tntc::predict(model->net, prepared, {});
    std::vector<int> predicted;
    json rows = json::array();
    for (std::size_t i = 0; i < probs.size(); ++i) {
      predicted.push_back(tntc::emotion_index(probs[i].predicted));
      rows.push_back({{"id", prepared.ids[i]},
                      {"label", tntc::emotion_name(tntc::emotion_from_index(prepared.labels[i]))},
                      {"predicted", tntc::emotion_name(probs[i].predicted)},
                      {"probs", probs[i].probs}});
    }
    auto out = tntc::to_json(tntc::evaluate_predictions(predicted, prepared.labels));
    out["predictions"] = rows;
    out["warnings"] = warning_lines(warnings);
    emit(result_json, out);
  });
}

tntc_status tntc_model_predict(tntc_model* model, const tntc_dataset* data, size_t index, double probs[4],
                               int* predicted) {
  return guarded([&] {
    require(model, "model");
    const auto prepared = prepare_single(data, index, model->net.config().backbone.input_size);
    const auto p = tntc::predict(model->net, prepared, {}).front();
    if (probs) std::copy(p.probs.begin(), p.probs.end(), probs);
    if (predicted) *predicted = tntc::emotion_index(p.predicted);
  });
}

tntc_status tntc_model_attention(tntc_model* model, const tntc_dataset* data, size_t index, int level, double* out,
                                 size_t capacity, int* tokens) {
  return guarded([&] {
    require(model, "model");
    if (level < 1 || level > tntc::kNumLevels) throw InvalidArgument("level must be in 1..4");
    auto* tcm = model->net.tcm(level);
    if (tcm == nullptr)
      throw Unavailable("model '" + model->net.ablation().name() + "' has no TCM at level " + std::to_string(level));
    const int t = tcm->token_count();
    if (tokens) *tokens = t;
    if (out == nullptr) return;
    if (capacity < static_cast<std::size_t>(t) * t) throw BufferTooSmall(capacity, static_cast<std::size_t>(t) * t);
    const auto prepared = prepare_single(data, index, model->net.config().backbone.input_size);
    model->net.forward(prepared.sji, prepared.afi, tntc::Mode::eval);
    const auto mean = tcm->encoder().mean_attention();
    std::copy(mean.values().begin(), mean.values().end(), out);
  });
}

// ---------------------------------------------------------------- experiments

tntc_status tntc_cross_validate(const char* config_json, const tntc_dataset* data, tntc_progress_fn progress,
                                void* user, char** report_json) {
  return guarded([&] {
    require(data, "dataset");
    require(report_json, "report_json");
    const auto cfg = run_config(config_json);
    std::ostringstream warnings;
    const auto prepared = tntc::prepare_inputs(data->data, cfg.experiment.network.backbone.input_size, &warnings);
    json folds = json::array();
    const auto report = tntc::cross_validate(prepared, cfg.experiment, [&](const tntc::FoldOutcome& f) {
      json fold{{"fold", f.index},
                {"train_size", f.split.train.size()},
                {"test_size", f.split.test.size()},
                {"evaluation", tntc::to_json(f.evaluation)},
                {"log", train_log_json(f.log)}};
      folds.push_back(fold);
      notify(progress, user, {{"event", "fold"}, {"fold", f.index}, {"accuracy", f.evaluation.accuracy}});
    });
    auto out = tntc::to_json(report);
    out["folds"] = folds;
    out["warnings"] = warning_lines(warnings);
    emit(report_json, out);
  });
}

tntc_status tntc_run_ablation(const char* config_json, const tntc_dataset* data, tntc_progress_fn progress, void* user,
                              char** result_json) {
  return guarded([&] {
    require(data, "dataset");
    require(result_json, "result_json");
    const auto cfg = run_config(config_json);
    std::ostringstream warnings;
    const auto prepared = tntc::prepare_inputs(data->data, cfg.experiment.network.backbone.input_size, &warnings);
    const auto rows = tntc::run_ablation_suite(prepared, cfg.experiment, [&](const tntc::AblationRow& r) {
      notify(progress, user, {{"event", "ablation_row"}, {"name", r.name}, {"summary", r.report.render()}});
    });
    json out_rows = json::array();
    for (const auto& r : rows)
      out_rows.push_back({{"name", r.name}, {"ablation", r.ablation.name()}, {"report", tntc::to_json(r.report)}});
    emit(result_json, {{"rows", out_rows},
                       {"split_seed", cfg.experiment.split_seed},
                       {"table", tntc::render_ablation_table(rows)},
                       {"warnings", warning_lines(warnings)}});
  });
}

// ---------------------------------------------------------------- export helpers

tntc_status tntc_write_heatmap_png(const double* matrix, int tokens, const char* path) {
  return guarded([&] {
    require(matrix, "matrix");
    require(path, "path");
    if (tokens <= 0) throw InvalidArgument("tokens must be positive");
    const std::size_t n = static_cast<std::size_t>(tokens) * tokens;
    tntc::Tensor m({tokens, tokens}, std::vector<double>(matrix, matrix + n));
    tntc::write_png(tntc::render_attention_heatmap(m), path);
  });
}

tntc_status tntc_hash_file(const char* path, char out[41]) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    write_hash(tntc::git_blob_hash_file(path), out);
  });
}

tntc_status tntc_hash_bytes(const void* data, size_t size, char out[41]) {
  return guarded([&] {
    require(out, "out");
    if (size > 0) require(data, "data");
    write_hash(tntc::git_blob_hash(std::string(static_cast<const char*>(data), size)), out);
  });
}

}  // extern "C"
