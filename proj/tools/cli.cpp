#include "zoo/cli.hpp"

#include "zoo/compose.hpp"
#include "zoo/error.hpp"
#include "zoo/executor.hpp"
#include "zoo/models.hpp"
#include "zoo/registry.hpp"
#include "zoo/rng.hpp"
#include "zoo/serve.hpp"
#include "zoo/store.hpp"
#include "zoo/weights.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <pthread.h>
#include <signal.h>

namespace fs = std::filesystem;

namespace zoo::cli {
namespace {

constexpr const char* kBuiltVersion = "1.0.0";
constexpr const char* kBuiltAuthor = "zoo";

fs::path default_store() {
    if (const char* env = std::getenv("ZOO_STORE"); env && *env) return env;
    if (const char* home = std::getenv("HOME"); home && *home) return fs::path(home) / ".zoo";
    return ".zoo";
}

std::string one_line(std::string text) {
    std::replace(text.begin(), text.end(), '\n', ' ');
    return text;
}

std::string fmt_us(double us) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", us);
    return buf;
}

/// A service named on the command line: a directory or `name[@version]`.
struct Located {
    ServiceManifest manifest;
    std::optional<fs::path> dir;
};

Located locate(const std::string& spec, const LocalStore& store) {
    if (fs::is_directory(spec)) return {validate_service_dir(spec), fs::path(spec)};
    const auto at = spec.find('@');
    const std::string name = spec.substr(0, at);
    const std::string version = at == std::string::npos ? "latest" : spec.substr(at + 1);
    if (!valid_service_name(name))
        throw ValidationError("'" + spec + "' is neither a service directory nor name[@version]");
    return {store.resolve(name, version), std::nullopt};
}

/// Pipelines resolve members through the store, so members given as
/// directories are installed there first.
ServiceRef ensure_in_store(const Located& svc, const LocalStore& store) {
    if (svc.dir && !store.intact(svc.manifest.ref())) store.install_dir(*svc.dir);
    return svc.manifest.ref();
}

std::shared_ptr<const ServiceRuntime> load_runtime(const Located& svc, const LocalStore& store) {
    std::optional<fs::path> leaf_dir;
    if (svc.dir && svc.manifest.leaf) leaf_dir = svc.dir;
    return std::make_shared<const ServiceRuntime>(svc.manifest, store, leaf_dir);
}

std::string argmax_rows(const Tensor& t) {
    const auto rows = t.dim(0);
    const auto width = t.size() / static_cast<std::size_t>(rows);
    std::string out;
    for (std::int64_t r = 0; r < rows; ++r) {
        const auto row = t.data().subspan(static_cast<std::size_t>(r) * width, width);
        const auto best = std::max_element(row.begin(), row.end()) - row.begin();
        out += (r ? "," : "") + std::to_string(best);
    }
    return out;
}

/// Blocks until SIGINT or SIGTERM. Callers block the signals before starting
/// server threads so that only this thread receives them.
sigset_t shutdown_signals() {
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    return set;
}

template <typename Server>
void serve_until_signal(Server& server, const std::string& host, int port, const std::string& banner,
                        std::ostream& out) {
    sigset_t set = shutdown_signals();
    sigset_t old;
    pthread_sigmask(SIG_BLOCK, &set, &old);
    int bound = 0;
    try {
        bound = server.start(host, port);
    } catch (...) {
        pthread_sigmask(SIG_SETMASK, &old, nullptr);
        throw;
    }
    out << banner << " on http://" << host << ":" << bound << std::endl;
    int sig = 0;
    sigwait(&set, &sig);
    server.stop();
    pthread_sigmask(SIG_SETMASK, &old, nullptr);
    out << "stopped" << std::endl;
}

// --- subcommands -----------------------------------------------------------

int cmd_build(const std::string& model, std::uint64_t seed, const fs::path& dir, std::int64_t image_size,
              std::ostream& out) {
    const auto m = build_model_service(model, seed, dir, image_size);
    out << m.ref().str() << " " << dir.string() << " sha256=" << m.leaf->sha256 << "\n";
    return kOk;
}

int cmd_run(const std::string& service, const fs::path& input, const std::string& profile_csv,
            const std::string& output, const LocalStore& store, std::ostream& out) {
    const Located svc = locate(service, store);
    const auto runtime = load_runtime(svc, store);
    const ParamTable table = load_weights(input);
    std::vector<Tensor> inputs;
    for (const auto& [name, tensor] : table) inputs.push_back(tensor);
    const auto& ports = svc.manifest.inputs.ports;
    if (inputs.size() != ports.size())
        throw ValidationError(input.string() + " holds " + std::to_string(inputs.size()) + " tensors, service " +
                              svc.manifest.ref().str() + " has " + std::to_string(ports.size()) + " input ports");

    const ServiceRun run = runtime->run(inputs, !profile_csv.empty());
    const auto& out_ports = svc.manifest.outputs.ports;
    for (std::size_t i = 0; i < run.outputs.size(); ++i) {
        const auto& t = run.outputs[i];
        out << out_ports[i].name << " " << shape_to_string(t.shape()) << " argmax=" << argmax_rows(t) << "\n";
    }
    if (!output.empty()) {
        ParamTable result;
        for (std::size_t i = 0; i < run.outputs.size(); ++i) result.emplace(out_ports[i].name, run.outputs[i]);
        save_weights(result, output);
    }
    if (!profile_csv.empty() && run.profile) {
        std::ofstream f(profile_csv, std::ios::binary);
        f << report_to_csv(*run.profile);
        if (!f) throw IoError("cannot write " + profile_csv);
        out << "profile: " << run.profile->records.size() << " nodes, " << fmt_us(run.profile->total_us())
            << " us -> " << profile_csv << "\n";
    }
    return kOk;
}

int cmd_check(const std::string& a, const std::string& b, const LocalStore& store, std::ostream& out,
              std::ostream& err) {
    const auto ma = locate(a, store).manifest;
    const auto mb = locate(b, store).manifest;
    const CompatReport report = check_compat(ma.outputs, mb.inputs);
    if (report.compatible) {
        out << "compatible\n";
        return kOk;
    }
    err << "error[" << kValidation << "]: " << ma.ref().str() << " -> " << mb.ref().str() << " "
        << one_line(report.summary()) << "\n";
    return kValidation;
}

int cmd_compose(const std::string& name, const std::vector<std::string>& members, const fs::path& dir,
                const LocalStore& store, std::ostream& out) {
    std::vector<ServiceManifest> manifests;
    for (const auto& spec : members) {
        const Located svc = locate(spec, store);
        ensure_in_store(svc, store);
        manifests.push_back(svc.manifest);
    }
    const ServiceManifest composite = compose_sequential(name, manifests);
    write_manifest(dir, composite);
    out << composite.ref().str() << " " << dir.string() << "\n";
    return kOk;
}

int cmd_pull(const std::string& ref, const std::string& registry, const LocalStore& store, std::ostream& out) {
    const auto path = registry::pull(ServiceRef::parse(ref), registry::Endpoint::parse(registry), store);
    out << path.string() << "\n";
    return kOk;
}

int cmd_publish(const std::string& service, const std::string& registry, const LocalStore& store,
                std::ostream& out) {
    const Located svc = locate(service, store);
    const fs::path dir = svc.dir ? *svc.dir : store.service_dir(svc.manifest.ref());
    const auto receipt = registry::publish(dir, registry::Endpoint::parse(registry));
    out << "published " << receipt.name << "@" << receipt.version;
    if (!receipt.sha256.empty()) out << " sha256=" << receipt.sha256;
    out << "\n";
    return kOk;
}

int cmd_serve(const std::string& service, const std::string& host, int port, bool profile, const LocalStore& store,
              std::ostream& out) {
    const Located svc = locate(service, store);
    std::shared_ptr<const ServiceRuntime> runtime;
    try {
        runtime = load_runtime(svc, store);
    } catch (const MissingServiceError& e) {
        throw StartupError(std::string("cannot load service: ") + e.what());
    }
    auto handler = std::make_shared<const serve::InferenceService>(runtime, profile);
    serve::InferenceServer server(handler);
    serve_until_signal(server, host, port, "serving " + svc.manifest.ref().str(), out);
    return kOk;
}

int cmd_registry_serve(const fs::path& root, const std::string& host, int port, std::ostream& out) {
    fs::create_directories(root);
    registry::RegistryServer server(root);
    serve_until_signal(server, host, port, "registry " + root.string(), out);
    return kOk;
}

int cmd_install(const fs::path& dir, const LocalStore& store, std::ostream& out) {
    out << store.install_dir(dir).string() << "\n";
    return kOk;
}

int cmd_bench(const std::vector<std::string>& models, int repeat, std::uint64_t seed, const std::string& csv,
              std::ostream& out) {
    std::vector<BenchResult> results;
    for (const auto& model : models) {
        results.push_back(bench_model(model, repeat, seed));
        const auto& r = results.back();
        out << model << ": median " << fmt_us(r.median_us) << " us over " << repeat << " reps, " << r.node_count
            << " nodes, " << r.param_bytes << " param bytes\n";
    }
    const std::string text = bench_csv(results);
    if (csv.empty()) {
        out << text;
    } else {
        std::ofstream f(csv, std::ios::binary);
        f << text;
        if (!f) throw IoError("cannot write " + csv);
    }
    return kOk;
}

Tensor bench_input(const Graph& graph, std::uint64_t seed) {
    Shape shape = std::get<InputAttrs>(graph.node(graph.inputs().front().node).attrs).shape;
    shape[0] = 1;
    XorShift64Star rng(seed ^ 0x5EEDull);
    std::vector<float> data(static_cast<std::size_t>(element_count(shape)));
    for (auto& v : data) v = rng.unit();
    return Tensor(shape, std::move(data));
}

}  // namespace

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const IntegrityError*>(&e) || dynamic_cast<const ContainerError*>(&e)) return kIntegrity;
    if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const MissingServiceError*>(&e) ||
        dynamic_cast<const fs::filesystem_error*>(&e))
        return kIo;
    return kValidation;
}

void model_signature(std::string_view model, const Graph& graph, TypeSignature& inputs, TypeSignature& outputs) {
    const auto& in = std::get<InputAttrs>(graph.node(graph.inputs().front().node).attrs);
    Port image{"image", DType::F32, in.shape, model == "lenet5" ? "image/gray" : "image/rgb"};
    image.shape[0] = kWildcard;
    Shape concrete = in.shape;
    concrete[0] = 1;
    const auto shapes = infer_shapes(graph, {{graph.inputs().front().name, concrete}});
    Shape probs_shape = shapes[static_cast<std::size_t>(graph.outputs().front())];
    probs_shape[0] = kWildcard;
    inputs.ports = {image};
    outputs.ports = {Port{"probs", DType::F32, probs_shape, "probs"}};
}

ServiceManifest build_model_service(std::string_view model, std::uint64_t seed, const fs::path& dir,
                                    std::int64_t image_size) {
    const Graph graph = (model == "inceptionv3" && image_size > 0) ? models::build_inceptionv3(image_size)
                                                                    : models::build_model(model);
    ServiceManifest m;
    m.name = std::string(model);
    m.version = SemVer::parse(kBuiltVersion);
    m.authors = {kBuiltAuthor};
    model_signature(model, graph, m.inputs, m.outputs);
    m.created = reproducible_timestamp();
    return write_leaf_service(dir, m, graph, models::random_init(graph, seed));
}

double median(std::vector<double> values) {
    if (values.empty()) throw ValidationError("median of no values");
    std::sort(values.begin(), values.end());
    const auto n = values.size();
    return n % 2 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

BenchResult bench_model(std::string_view model, int repeat, std::uint64_t seed) {
    if (repeat < 1) throw ValidationError("--repeat must be at least 1");
    const Graph structure = models::build_model(model);
    const Graph graph = structure.with_params(models::random_init(structure, seed));
    const std::map<std::string, Tensor> feed{{graph.inputs().front().name, bench_input(graph, seed)}};

    BenchResult r;
    r.model = std::string(model);
    r.node_count = static_cast<std::int64_t>(graph.node_count());
    r.param_bytes = models::count_params(graph).bytes;
    for (int i = 0; i < repeat; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto result = execute(graph, feed);
        const auto t1 = std::chrono::steady_clock::now();
        r.latencies_us.push_back(
            static_cast<double>(std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count()) / 1000.0);
    }
    r.median_us = median(r.latencies_us);
    return r;
}

std::string bench_csv(const std::vector<BenchResult>& results) {
    std::ostringstream os;
    os << "model,rep,latency_us,param_bytes,node_count\n";
    for (const auto& r : results) {
        const auto tail = "," + std::to_string(r.param_bytes) + "," + std::to_string(r.node_count) + "\n";
        for (std::size_t i = 0; i < r.latencies_us.size(); ++i)
            os << r.model << "," << i + 1 << "," << fmt_us(r.latencies_us[i]) << tail;
        os << r.model << ",median," << fmt_us(r.median_us) << tail;
    }
    return os.str();
}

int cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Model zoo: build, compose, share and serve inference services", "zoo"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string store_root = default_store().string();
    app.add_option("--store", store_root, "Local service store (default $ZOO_STORE or ~/.zoo)");

    std::string model, service, name, registry_url, input, output, profile_csv, csv, host = "127.0.0.1";
    std::string a, b, dir;
    std::vector<std::string> members, models;
    std::uint64_t seed = 42;
    std::int64_t image_size = 0;
    int port = 8080, repeat = 5;
    bool profile = false;

    auto* build = app.add_subcommand("build", "Build a model with seeded weights into a service directory");
    build->add_option("model", model)->required()->check(CLI::IsMember(models::model_names()));
    build->add_option("--seed", seed, "Weight seed")->capture_default_str();
    build->add_option("--out", dir, "Output directory")->required();
    build->add_option("--image-size", image_size, "InceptionV3 input resolution (>= 75)");

    auto* run = app.add_subcommand("run", "Run a service on a ZOOW input file");
    run->add_option("service", service, "Service directory or name[@version]")->required();
    run->add_option("--input", input, "ZOOW file; tensors feed input ports in name order")->required();
    run->add_option("--profile", profile_csv, "Write per-node latencies to this CSV");
    run->add_option("--output", output, "Write outputs to this ZOOW file");

    auto* check = app.add_subcommand("check", "Check that A's outputs fit B's inputs");
    check->add_option("a", a)->required();
    check->add_option("b", b)->required();

    auto* compose = app.add_subcommand("compose", "Chain services into a pipeline");
    compose->add_option("name", name)->required();
    compose->add_option("services", members, "Two or more services, first to last")->required()->expected(2, -1);
    compose->add_option("--out", dir, "Output directory")->required();

    auto* pull = app.add_subcommand("pull", "Fetch a service from a registry into the store");
    pull->add_option("ref", name, "name@version")->required();
    pull->add_option("--registry", registry_url, "http:// or file:// registry")->required();

    auto* publish = app.add_subcommand("publish", "Upload a service to a registry");
    publish->add_option("service", service, "Service directory or name[@version]")->required();
    publish->add_option("--registry", registry_url, "http:// or file:// registry")->required();

    auto* serve_cmd = app.add_subcommand("serve", "Serve a service over HTTP until SIGINT/SIGTERM");
    serve_cmd->add_option("service", service)->required();
    serve_cmd->add_option("--port", port)->capture_default_str()->check(CLI::Range(0, 65535));
    serve_cmd->add_option("--host", host)->capture_default_str();
    serve_cmd->add_flag("--profile", profile, "Always include per-node profile rows");

    auto* bench = app.add_subcommand("bench", "Time repeated inference with seeded weights");
    bench->add_option("--models", models, "Comma-separated model names")
        ->required()
        ->delimiter(',')
        ->check(CLI::IsMember(models::model_names()));
    bench->add_option("--repeat", repeat)->capture_default_str()->check(CLI::PositiveNumber);
    bench->add_option("--seed", seed)->capture_default_str();
    bench->add_option("--csv", csv, "CSV output file (stdout when omitted)");

    auto* install = app.add_subcommand("install", "Copy a service directory into the store");
    install->add_option("dir", dir)->required()->check(CLI::ExistingDirectory);

    auto* registry_serve = app.add_subcommand("registry-serve", "Serve a directory as an HTTP registry");
    registry_serve->add_option("dir", dir)->required();
    registry_serve->add_option("--port", port)->capture_default_str()->check(CLI::Range(0, 65535));
    registry_serve->add_option("--host", host)->capture_default_str();

    std::vector<const char*> argv{"zoo"};
    for (const auto& s : args) argv.push_back(s.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error[" << kUsage << "]: " << one_line(e.what()) << "\n";
        return kUsage;
    }

    try {
        const LocalStore store(store_root);
        if (*build) return cmd_build(model, seed, dir, image_size, out);
        if (*run) return cmd_run(service, input, profile_csv, output, store, out);
        if (*check) return cmd_check(a, b, store, out, err);
        if (*compose) return cmd_compose(name, members, dir, store, out);
        if (*pull) return cmd_pull(name, registry_url, store, out);
        if (*publish) return cmd_publish(service, registry_url, store, out);
        if (*serve_cmd) return cmd_serve(service, host, port, profile, store, out);
        if (*bench) return cmd_bench(models, repeat, seed, csv, out);
        if (*install) return cmd_install(dir, store, out);
        if (*registry_serve) return cmd_registry_serve(dir, host, port, out);
    } catch (const std::exception& e) {
        const int code = exit_code_for(e);
        err << "error[" << code << "]: " << one_line(e.what()) << "\n";
        return code;
    }
    return kUsage;
}

int cli(int argc, const char* const* argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return cli(args, std::cout, std::cerr);
}

}  // namespace zoo::cli
