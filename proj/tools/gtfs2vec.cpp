// gtfs2vec command line: the full pipeline (`run`) and each stage on its own.

#include <cstdio>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "gtfs2vec/pipeline.hpp"
#include "gtfs2vec/similarity.hpp"

namespace {

using namespace gtfs2vec;

void write_or_print(std::string const& out, std::string const& text) {
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    detail::write_file(out, text);
  }
}

// "city=path" pairs from --include-empty-cells
std::map<std::string, std::vector<cell_id>> parse_boundaries(
    std::vector<std::string> const& specs, int resolution) {
  std::map<std::string, std::vector<cell_id>> out;
  for (auto const& s : specs) {
    auto const eq = s.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw config_error("--include-empty-cells expects CITY=GEOJSON, got '" +
                         s + "'");
    }
    out[s.substr(0, eq)] = boundary_cells(
        boundary_from_geojson(detail::read_file(s.substr(eq + 1))), resolution);
  }
  return out;
}

struct train_flags {
  int epochs = train_config{}.epochs;
  int batch_size = train_config{}.batch_size;
  double learning_rate = train_config{}.learning_rate;
  std::string optimizer = "adam";
  std::uint64_t seed = 42 + train_seed_offset;
  bool no_shuffle = false;

  void add_to(CLI::App* app) {
    app->add_option("--epochs", epochs, "Training epochs")->capture_default_str();
    app->add_option("--batch-size", batch_size, "Minibatch size")
        ->capture_default_str();
    app->add_option("--learning-rate", learning_rate, "Step size")
        ->capture_default_str();
    app->add_option("--optimizer", optimizer, "adam or sgd")
        ->capture_default_str();
    app->add_option("--seed", seed,
                    "Training seed (the pipeline uses global seed + 1)")
        ->capture_default_str();
    app->add_flag("--no-shuffle", no_shuffle, "Keep row order in every epoch");
  }

  train_config config() const {
    train_config c;
    c.epochs = epochs;
    c.batch_size = batch_size;
    c.learning_rate = learning_rate;
    c.optimizer = parse_optimizer(optimizer);
    c.seed = seed;
    c.shuffle = !no_shuffle;
    c.validate();
    return c;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gtfs2vec: hexagon-level transit embeddings from GTFS feeds"};
  app.require_subcommand(1);

  // run
  std::string config_path;
  bool no_cache = false;
  bool quiet = false;
  auto* run_cmd = app.add_subcommand("run", "Run every stage from a config file");
  run_cmd->add_option("--config", config_path, "Run configuration")
      ->required()
      ->check(CLI::ExistingFile);
  run_cmd->add_flag("--no-cache", no_cache, "Recompute every stage");
  run_cmd->add_flag("-q,--quiet", quiet, "No progress output");

  // ingest
  std::string gtfs_path, city_id, date_text = "auto", ingest_out;
  std::int64_t population = 0;
  validation_options vopts;
  auto* ingest_cmd =
      app.add_subcommand("ingest", "Load and validate one feed, extract departures");
  ingest_cmd->add_option("--gtfs", gtfs_path, "GTFS zip or directory")
      ->required()
      ->check(CLI::ExistingPath);
  ingest_cmd->add_option("--city", city_id, "City id")->required();
  ingest_cmd->add_option("--population", population, "Declared population")
      ->capture_default_str();
  ingest_cmd->add_option("--date", date_text, "Service date YYYY-MM-DD or auto")
      ->capture_default_str();
  ingest_cmd->add_option("--min-routes", vopts.min_routes)->capture_default_str();
  ingest_cmd->add_option("--min-population", vopts.min_population)
      ->capture_default_str();
  ingest_cmd->add_option("--max-extent-km", vopts.max_extent_km)
      ->capture_default_str();
  ingest_cmd->add_option("--out", ingest_out, "Output directory")->required();

  // features
  std::vector<std::string> ingest_dirs, boundary_specs;
  std::string features_out;
  int resolution = default_resolution;
  auto* features_cmd =
      app.add_subcommand("features", "Compute the 34 hourly features per region");
  features_cmd->add_option("--in", ingest_dirs, "Ingest directories")
      ->required()
      ->check(CLI::ExistingDirectory);
  features_cmd->add_option("--resolution", resolution, "H3 resolution")
      ->capture_default_str();
  features_cmd->add_option("--include-empty-cells", boundary_specs,
                           "CITY=GEOJSON: also emit stop-free cells inside it");
  features_cmd->add_option("--out", features_out, "features.csv (- for stdout)");

  // train
  std::string train_features, norm_out, model_out, loss_out;
  train_flags tflags;
  auto* train_cmd = app.add_subcommand(
      "train", "Fit normalization and train the autoencoder");
  train_cmd->add_option("--features", train_features, "features.csv")
      ->required()
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--norm-out", norm_out, "Normalization parameters")
      ->required();
  train_cmd->add_option("--out", model_out, "Model file")->required();
  train_cmd->add_option("--loss-out", loss_out,
                        "Per-epoch loss CSV (default: <out>.loss.csv)");
  tflags.add_to(train_cmd);

  // embed
  std::string embed_model, embed_features, embed_norm, embed_out;
  auto* embed_cmd = app.add_subcommand("embed", "Encode regions with a trained model");
  embed_cmd->add_option("--model", embed_model)->required()->check(CLI::ExistingFile);
  embed_cmd->add_option("--features", embed_features)
      ->required()
      ->check(CLI::ExistingFile);
  embed_cmd->add_option("--norm", embed_norm)->required()->check(CLI::ExistingFile);
  embed_cmd->add_option("--out", embed_out, "embeddings.csv (- for stdout)");

  // cluster
  std::string cluster_embeddings_path, cluster_features, cluster_dir;
  std::vector<std::size_t> cut_list{3, 9};
  auto* cluster_cmd =
      app.add_subcommand("cluster", "Ward clustering, cuts and typology names");
  cluster_cmd->add_option("--embeddings", cluster_embeddings_path)
      ->required()
      ->check(CLI::ExistingFile);
  cluster_cmd->add_option("--features", cluster_features,
                          "Raw features, for cluster summaries")
      ->required()
      ->check(CLI::ExistingFile);
  cluster_cmd->add_option("--cuts", cut_list, "Cluster counts")
      ->delimiter(',')
      ->capture_default_str();
  cluster_cmd->add_option("--out-dir", cluster_dir,
                          "Writes dendrogram.csv, cuts.csv, cluster_summary.csv")
      ->required();

  // similar
  std::string sim_embeddings, sim_region, sim_cities, sim_cuts, sim_out;
  std::size_t sim_k = 10;
  bool cross_city_only = false;
  auto* similar_cmd =
      app.add_subcommand("similar", "Nearest regions in embedding space");
  similar_cmd->add_option("--embeddings", sim_embeddings)
      ->required()
      ->check(CLI::ExistingFile);
  similar_cmd->add_option("--region", sim_region, "Query as CITY:CELL")->required();
  similar_cmd->add_option("--k", sim_k, "Number of neighbors")->capture_default_str();
  similar_cmd->add_flag("--cross-city-only", cross_city_only,
                        "Skip regions of the query's own city");
  similar_cmd->add_option("--cities", sim_cities, "Comma-separated city filter");
  similar_cmd->add_option("--out", sim_out, "Output CSV (- for stdout)");

  // export
  std::string export_features, export_cuts, export_level = "k3", export_out;
  auto* export_cmd = app.add_subcommand("export", "Write a GeoJSON map layer");
  export_cmd->add_option("--features", export_features)
      ->required()
      ->check(CLI::ExistingFile);
  export_cmd->add_option("--cuts", export_cuts)->required()->check(CLI::ExistingFile);
  export_cmd->add_option("--level", export_level, "k3, k9 or features")
      ->check(CLI::IsMember({"k3", "k9", "features"}))
      ->capture_default_str();
  export_cmd->add_option("--out", export_out, "GeoJSON file (- for stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      run_options opts;
      opts.use_cache = !no_cache;
      if (!quiet) {
        opts.log = [](std::string_view msg) { std::cerr << msg << '\n'; };
      }
      auto const manifest = run(load_run_config(config_path), opts);
      for (auto const& e : manifest.excluded) {
        std::cerr << "excluded: " << e.city_id << ": " << e.reason << '\n';
      }
      std::cout << manifest_to_csv(manifest);
    } else if (*ingest_cmd) {
      std::optional<calendar_date> date;
      if (date_text != "auto") {
        date = parse_iso_date(date_text);
      }
      auto const result = ingest_feed(load_feed(gtfs_path, city_id, population),
                                      date, vopts);
      write_ingest(result, ingest_out);
      std::cerr << validation_report_csv({result.report});
      if (!result.included()) {
        std::cerr << "city " << city_id << " failed validation and is excluded\n";
        return 3;
      }
    } else if (*features_cmd) {
      std::vector<city_ingest> cities;
      for (auto const& d : ingest_dirs) {
        cities.push_back(read_ingest(d));
      }
      auto const m = compute_features(cities, resolution,
                                      parse_boundaries(boundary_specs, resolution));
      write_or_print(features_out, features_to_csv(m));
    } else if (*train_cmd) {
      auto const features = features_from_csv(detail::read_file(train_features));
      auto const params = fit(features);
      auto const result = train(transform(features.values, params), tflags.config());
      detail::write_file(norm_out, norm_params_to_text(params));
      detail::write_file(model_out, model_to_text(result.model));
      detail::write_file(loss_out.empty() ? model_out + ".loss.csv" : loss_out,
                         loss_history_to_csv(result.loss_history));
      std::cerr << "final loss " << result.loss_history.back() << '\n';
    } else if (*embed_cmd) {
      auto const model = model_from_text(detail::read_file(embed_model));
      auto const features = features_from_csv(detail::read_file(embed_features));
      auto const params = norm_params_from_text(detail::read_file(embed_norm));
      write_or_print(embed_out,
                     embeddings_to_csv(encode(model, features.rows,
                                              transform(features.values, params))));
    } else if (*cluster_cmd) {
      auto const emb = embeddings_from_csv(detail::read_file(cluster_embeddings_path));
      auto const features = features_from_csv(detail::read_file(cluster_features));
      std::vector<region_key> rows;
      for (auto const& e : emb) {
        rows.push_back(e.region);
      }
      if (rows != features.rows) {
        throw shape_mismatch("embeddings and features list different regions");
      }
      auto const outcome = cluster_embeddings(ward_agglomerate(embedding_matrix(emb)),
                                              features.values, cut_list);
      std::filesystem::path const dir{cluster_dir};
      detail::write_file(dir / "dendrogram.csv", dendrogram_to_csv(outcome.tree));
      detail::write_file(dir / "cuts.csv", cuts_to_csv(rows, outcome));
      detail::write_file(dir / "cluster_summary.csv", cluster_summary_to_csv(outcome));
    } else if (*similar_cmd) {
      embedding_index const index{embeddings_from_csv(detail::read_file(sim_embeddings))};
      search_filter filter;
      filter.exclude_same_city = cross_city_only;
      if (!sim_cities.empty()) {
        auto const parts = detail::split(sim_cities, ',');
        filter.cities = std::set<std::string>(parts.begin(), parts.end());
      }
      auto const query = parse_region_key(sim_region);
      write_or_print(sim_out,
                     neighbors_to_csv(query, index.nearest(query, sim_k, filter)));
    } else if (*export_cmd) {
      auto const features = features_from_csv(detail::read_file(export_features));
      auto const cuts = cuts_from_csv(detail::read_file(export_cuts));
      auto const records = assemble_records(features, matrix{}, {}, cuts);
      write_or_print(export_out,
                     export_geojson(records, parse_map_layer(export_level)).dump() +
                         "\n");
    }
  } catch (gtfs2vec::error const& e) {
    std::cerr << "gtfs2vec: " << e.what() << '\n';
    return 1;
  } catch (std::exception const& e) {
    std::cerr << "gtfs2vec: unexpected failure: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
