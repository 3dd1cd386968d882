#include "iws/iws.hpp"
#include "iws/server.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iostream>

namespace {

struct CorpusArgs {
    std::string path;
    std::string format = "jsonl-text";
    double min_coverage = 0.002;
    std::size_t k1 = 20;
    std::size_t k2 = 1500;
    std::string family;
};

void add_corpus_options(CLI::App* cmd, CorpusArgs& a)
{
    cmd->add_option("--corpus", a.path, "JSONL corpus")->required();
    cmd->add_option("--format", a.format, "jsonl-text or jsonl-vectors");
    cmd->add_option("--family", a.family, "keyword or mknn (default depends on corpus)");
    cmd->add_option("--min-coverage", a.min_coverage, "keyword LF coverage floor");
    cmd->add_option("--k1", a.k1, "mutual-kNN core size");
    cmd->add_option("--k2", a.k2, "mutual-kNN extension size");
}

iws::Workspace workspace_from(const CorpusArgs& a)
{
    iws::WorkspaceOptions opt;
    if (!a.family.empty())
        opt.family = iws::parse_family(a.family);
    opt.min_coverage = a.min_coverage;
    opt.k1 = a.k1;
    opt.k2 = a.k2;
    auto ds = iws::load_corpus(a.path, iws::parse_corpus_format(a.format));
    std::cerr << "corpus: " << ds.train.size() << " train, " << ds.test.size() << " test\n";
    auto ws = iws::build_workspace(std::move(ds), opt);
    std::cerr << "pool: " << ws.p() << " LFs (" << ws.pool_ref << ")\n";
    return ws;
}

void write_text(const std::string& path, const std::string& text)
{
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw iws::Error("cannot write " + path);
    out << text;
}

std::vector<int> parse_checkpoints(const std::vector<int>& given, int T)
{
    std::vector<int> marks = given.empty() ? iws::default_checkpoints() : given;
    if (std::find(marks.begin(), marks.end(), T) == marks.end())
        marks.push_back(T);
    std::sort(marks.begin(), marks.end());
    return marks;
}

iws::Server* g_server = nullptr;

void on_signal(int) {
    if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Interactive weak supervision engine"};
    app.require_subcommand(1);

    // synth
    iws::SyntheticCorpusConfig synth_cfg;
    std::string synth_out;
    auto* synth = app.add_subcommand("synth", "Write the synthetic two-topic corpus as JSONL");
    synth->add_option("--out", synth_out, "output path (default stdout)");
    synth->add_option("--seed", synth_cfg.seed, "generator seed");
    synth->add_option("--n-train", synth_cfg.n_train);
    synth->add_option("--n-test", synth_cfg.n_test);
    synth->add_option("--vocab-size", synth_cfg.vocab_size);

    // ingest
    std::string ingest_in, ingest_fmt = "jsonl-text";
    auto* ingest = app.add_subcommand("ingest", "Validate a corpus and print a summary");
    ingest->add_option("--input", ingest_in)->required();
    ingest->add_option("--format", ingest_fmt);

    // gen-lfs
    CorpusArgs gen_args;
    std::string gen_pool_out, gen_matrix_out;
    auto* gen = app.add_subcommand("gen-lfs", "Generate the candidate LF pool and its output matrix");
    add_corpus_options(gen, gen_args);
    gen->add_option("--pool-out", gen_pool_out, "LF pool JSON (default stdout)");
    gen->add_option("--matrix-out", gen_matrix_out, "LF output matrix JSON");

    // run-oracle
    CorpusArgs run_args;
    std::string run_mode = "lse_a", run_out, run_session_out;
    double run_r = 0.7, run_threshold = 0.7;
    std::size_t run_mtilde = 100;
    int run_T = 200, run_stride = 1;
    std::uint64_t run_seed = 0;
    std::vector<int> run_checkpoints;
    auto* run = app.add_subcommand("run-oracle", "Run the IWS loop against the simulated oracle");
    add_corpus_options(run, run_args);
    run->add_option("--mode", run_mode, "lse_a, lse_ac, as or random");
    run->add_option("--r", run_r, "accuracy threshold of the level set");
    run->add_option("--mtilde", run_mtilde, "extra LFs admitted by the ac final set");
    run->add_option("--T", run_T, "query budget");
    run->add_option("--seed", run_seed);
    run->add_option("--oracle-threshold", run_threshold);
    run->add_option("--refit-stride", run_stride, "refit the ensemble every N queries");
    run->add_option("--checkpoints", run_checkpoints, "iterations at which to evaluate");
    run->add_option("--out", run_out, "results CSV (default stdout)");
    run->add_option("--session-out", run_session_out, "write the final session state");

    // baseline-al
    CorpusArgs al_args;
    std::string al_out;
    int al_T = 200;
    std::uint64_t al_seed = 0;
    std::vector<int> al_checkpoints;
    auto* al = app.add_subcommand("baseline-al", "Uncertainty-sampling active learning baseline");
    add_corpus_options(al, al_args);
    al->add_option("--T", al_T);
    al->add_option("--seed", al_seed);
    al->add_option("--checkpoints", al_checkpoints);
    al->add_option("--out", al_out);

    // serve
    CorpusArgs serve_args;
    std::string serve_host = "127.0.0.1", serve_mode = "lse_a", serve_dir, serve_ui;
    int serve_port = 8080, serve_T = 200, serve_stride = 1;
    double serve_r = 0.7;
    std::size_t serve_mtilde = 100;
    auto* serve = app.add_subcommand("serve", "Serve the annotation API");
    add_corpus_options(serve, serve_args);
    serve->add_option("--host", serve_host);
    serve->add_option("--port", serve_port);
    serve->add_option("--mode", serve_mode);
    serve->add_option("--r", serve_r);
    serve->add_option("--mtilde", serve_mtilde);
    serve->add_option("--T", serve_T, "default query budget for new sessions");
    serve->add_option("--refit-stride", serve_stride);
    serve->add_option("--session-dir", serve_dir, "directory for session files");
    serve->add_option("--ui-dir", serve_ui, "static UI bundle");

    // eval
    CorpusArgs eval_args;
    std::string eval_session, eval_scenario;
    auto* eval = app.add_subcommand("eval", "Finalize a saved session and report metrics");
    add_corpus_options(eval, eval_args);
    eval->add_option("--session", eval_session)->required();
    eval->add_option("--scenario", eval_scenario, "a, ac or as (default from the session mode)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*synth) {
            write_text(synth_out, iws::serialize_corpus(iws::make_synthetic_corpus(synth_cfg)));
        } else if (*ingest) {
            const auto ds = iws::load_corpus(ingest_in, iws::parse_corpus_format(ingest_fmt));
            iws::validate_dataset(ds);
            nlohmann::ordered_json j;
            j["train"] = ds.train.size();
            j["test"] = ds.test.size();
            j["embeddings"] = ds.has_embeddings();
            j["train_gold"] = ds.train_has_gold();
            j["test_gold"] = ds.test_has_gold();
            std::cout << j.dump(2) << "\n";
        } else if (*gen) {
            const auto ws = workspace_from(gen_args);
            write_text(gen_pool_out, iws::pool_to_json(ws.pool).dump() + "\n");
            if (!gen_matrix_out.empty())
                write_text(gen_matrix_out, iws::matrix_to_json(ws.lambda).dump() + "\n");
        } else if (*run) {
            const auto ws = workspace_from(run_args);
            iws::AcquisitionConfig cfg;
            cfg.mode = iws::parse_mode(run_mode);
            cfg.r = run_r;
            cfg.m_tilde = run_mtilde;
            cfg.validate();
            iws::OracleConfig oracle{run_threshold};
            const auto result = iws::run_with_oracle_session(ws, cfg, run_T, oracle, run_seed,
                                                             parse_checkpoints(run_checkpoints, run_T), run_stride);
            write_text(run_out, iws::results_csv(result.results));
            if (!run_session_out.empty())
                iws::save_session(result.state, run_session_out);
        } else if (*al) {
            const auto ws = workspace_from(al_args);
            write_text(al_out, iws::results_csv(iws::active_learning_baseline(ws, al_T, al_seed, parse_checkpoints(al_checkpoints, al_T))));
        } else if (*serve) {
            const auto ws = workspace_from(serve_args);
            iws::ServerOptions opts;
            if (!serve_dir.empty())
                opts.session_dir = serve_dir;
            if (!serve_ui.empty())
                opts.ui_dir = serve_ui;
            opts.defaults.mode = iws::parse_mode(serve_mode);
            opts.defaults.r = serve_r;
            opts.defaults.m_tilde = serve_mtilde;
            opts.defaults.validate();
            opts.default_T = serve_T;
            opts.refit_stride = serve_stride;
            iws::Server server(ws, opts);
            g_server = &server;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            std::cerr << "listening on " << serve_host << ":" << serve_port << "\n";
            if (!server.listen(serve_host, serve_port))
                throw iws::Error("cannot listen on " + serve_host + ":" + std::to_string(serve_port));
        } else if (*eval) {
            const auto ws = workspace_from(eval_args);
            const auto s = iws::load_session(eval_session);
            if (s.pool_ref != ws.pool_ref)
                throw iws::ValidationError("session was recorded against a different LF pool");
            const auto scenario = eval_scenario.empty() ? iws::scenario_for(s.config.mode) : iws::parse_scenario(eval_scenario);
            const auto r = iws::finalize_pipeline(s, ws, scenario);
            std::cout << iws::to_json(r).dump(2) << "\n";
        }
    } catch (const iws::ConfigError& e) {
        std::cerr << "error: " << e.what();
        if (!e.field().empty())
            std::cerr << " (" << e.field() << ")";
        std::cerr << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
