#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "topoforge/config.hpp"
#include "topoforge/error.hpp"
#include "topoforge/io.hpp"

using namespace topoforge;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "topoforge_test_config_io";
  std::filesystem::create_directories(dir);
  return dir / name;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Message of the parse error raised by `text`, empty when it parses.
std::string parse_error(const std::string& text) {
  try {
    parse_config_text(text, "cfg.txt");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Parse);
    return e.what();
  }
  return {};
}

// Minimal independent P5 reader: header tokens separated by whitespace, then raw bytes.
struct Pgm {
  int width = 0, height = 0, maxval = 0;
  std::string pixels;
};

Pgm read_reference(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::string magic;
  Pgm g;
  in >> magic >> g.width >> g.height >> g.maxval;
  REQUIRE(magic == "P5");
  in.get();
  g.pixels.resize(static_cast<std::size_t>(g.width) * g.height);
  in.read(g.pixels.data(), static_cast<std::streamsize>(g.pixels.size()));
  CHECK(in.gcount() == static_cast<std::streamsize>(g.pixels.size()));
  CHECK(in.peek() == std::char_traits<char>::eof());
  return g;
}

}  // namespace

TEST_CASE("presets") {
  CHECK(preset_names().size() == 4);
  const auto sb = preset_config("short_beam");
  CHECK(sb.control_u == 61);
  CHECK(sb.degree_u == 3);
  CHECK(sb.volume_fraction == 0.5);
  const auto cl = preset_config("cantilever");
  CHECK(cl.control_u == 101);
  CHECK(cl.control_v == 51);
  CHECK(cl.load == 1e6);
  CHECK(cl.volume_fraction == 0.4);
  CHECK(preset_config("l_beam").control_u == 103);
  CHECK(preset_config("quarter_annulus").control_v == 62);
  CHECK_THROWS_AS(preset_config("bridge"), Error);
  for (const auto& name : preset_names()) {
    auto c = preset_config(name);
    c.control_u = c.control_v = 10;
    const auto pb = build_problem(c);
    CHECK(pb.geometry.count_u() == 10);
    CHECK_FALSE(pb.bc.fixed.empty());
    REQUIRE(pb.bc.loads.size() == 1);
    CHECK(pb.bc.loads[0].direction == 1);
    CHECK(pb.bc.loads[0].magnitude == -c.load);
  }
}

TEST_CASE("config parsing") {
  const auto c = parse_config_text(
      "# short beam, three holes\n"
      "preset = \"short_beam\"   # comment\n"
      "[problem]\n"
      "max_holes = 3\n"
      "[topology]\n"
      "mu0 = 0.8\n"
      "mu1 = 0.6\n");
  auto expect = preset_config("short_beam");
  expect.max_holes = 3;
  expect.mu0 = 0.8;
  expect.mu1 = 0.6;
  CHECK(c == expect);

  CHECK(parse_config_text("preset = \"cantilever\"\n") == preset_config("cantilever"));
  CHECK(parse_config_text("preset = \"l_beam\"\n[problem]\nmax_holes = inf\n").max_holes == -1);
  CHECK(parse_config_text("preset = \"l_beam\"\noutput_dir = \"a # b\"\n").output_dir == "a # b");

  CHECK(parse_error("preset = \"short_beam\"\n[problem]\nvolume_fraction = 1.5\n").find("cfg.txt") != std::string::npos);
  CHECK(parse_error("preset = \"short_beam\"\n[problem]\nvolume_fraction = 1.5\n").find(":3:") != std::string::npos);
  CHECK(parse_error("preset = \"short_beam\"\n\n[mesh]\nwobble = 3\n").find(":4:") != std::string::npos);
  CHECK(parse_error("[mesh]\ncontrol_u = 9\n").find("preset") != std::string::npos);
  CHECK(parse_error("preset = \"short_beam\"\n[mesh]\ncontrol_u = 9\ncontrol_u = 10\n").find(":4:") != std::string::npos);
  CHECK(parse_error("preset = \"short_beam\"\n[material]\n\npoisson_ratio = 0.7\n").find(":4:") != std::string::npos);
  CHECK(parse_error("preset = \"short_beam\"\n[mesh]\ncontrol_u = nine\n").find(":3:") != std::string::npos);
  CHECK(parse_error("preset = \"short_beam\"\n[topology]\nfreeze_excess = maybe\n") != "");
  CHECK(parse_error("preset = \"short_beam\"\n[nowhere\n") != "");
  CHECK(parse_error("preset = \"nope\"\n") != "");
}

TEST_CASE("config round trip") {
  for (const auto& name : preset_names()) {
    auto c = preset_config(name);
    c.output_dir = "out dir/x";
    c.mu0 = 0.1 + 0.2;
    c.threshold = 1.0 / 3.0;
    c.max_holes = 4;
    c.freeze_excess = false;
    c.initial_density = 0.55;
    CHECK(parse_config_text(serialize_config(c)) == c);
  }
  const auto path = scratch("cfg.toml");
  auto c = preset_config("quarter_annulus");
  c.max_iter = 7;
  write_text(path, serialize_config(c));
  CHECK(parse_config(path) == c);
  CHECK_THROWS_AS(parse_config(scratch("missing.toml")), Error);
}

TEST_CASE("setting single values") {
  auto c = preset_config("short_beam");
  set_config_value(c, "problem.max_holes", "2");
  set_config_value(c, "optimizer.stop_on_convergence", "true");
  CHECK(c.max_holes == 2);
  CHECK(c.stop_on_convergence);
  CHECK_THROWS_AS(set_config_value(c, "problem.nothing", "1"), Error);
}

TEST_CASE("pgm files") {
  GreyImage img(5, 3);
  for (std::size_t k = 0; k < img.size(); ++k) img.data()[k] = static_cast<std::uint8_t>(k * 17);
  const auto path = scratch("img.pgm");
  write_pgm(path, img);
  CHECK(read_pgm(path) == img);
  const auto ref = read_reference(path);
  CHECK(ref.width == 5);
  CHECK(ref.height == 3);
  CHECK(ref.maxval == 255);
  // top image row is the largest b; columns run along a
  CHECK(static_cast<std::uint8_t>(ref.pixels[0]) == img(0, 2));
  CHECK(static_cast<std::uint8_t>(ref.pixels[5 * 2 + 4]) == img(4, 0));

  write_text(scratch("bad.pgm"), "P2\n1 1\n255\n0\n");
  CHECK_THROWS_AS(read_pgm(scratch("bad.pgm")), Error);
  CHECK_THROWS_AS(read_pgm(scratch("absent.pgm")), Error);

  RasterField r{Grid2D<double>(2, 2, 0.5), Grid2D<std::uint8_t>(2, 2, 1)};
  r.values(1, 1) = 1.0;
  r.mask(0, 1) = 0;
  const auto px = density_pixels(r);
  CHECK(px(0, 0) == 128);
  CHECK(px(1, 1) == 255);
  CHECK(px(0, 1) == 0);
  const auto back = raster_from_pixels(px);
  CHECK(back.values(1, 1) == 1.0);
  CHECK(back.mask(0, 1) == 1);
}

TEST_CASE("diagram csv") {
  const std::vector<PersistencePair> pairs = {{0, -1.0, 0.0, {3, 4}, std::nullopt}, {0, -0.5, -0.25, {1, 2}, Cell{5, 6}}};
  CHECK(diagram_csv(pairs) ==
        "dim,birth,death,birth_a,birth_b,death_a,death_b\n"
        "0,-1,inf,3,4,,\n"
        "0,-0.5,-0.25,1,2,5,6\n");
}

TEST_CASE("history csv round-trips values") {
  std::vector<IterationRecord> h(2);
  h[0].compliance = 0.1 + 0.2;
  h[1] = {1, 2.5, 0.49, 1, 2, -0.5, 0.0, true, false, 3, 0.01};
  const std::string csv = history_csv(h);
  CHECK(csv.rfind("iter,compliance,volume,N0,N1,C_top0,C_top1\n", 0) == 0);
  CHECK(csv.find("0.30000000000000004") != std::string::npos);
  CHECK(topology_csv(h).find("1,1,2,-0.5,0,1,0,3\n") != std::string::npos);
}

TEST_CASE("binary snapshots reproduce the logged topology") {
  auto c = preset_config("short_beam");
  c.control_u = c.control_v = 14;
  c.degree_u = c.degree_v = 2;
  c.ph_res_u = c.ph_res_v = 40;
  c.max_iter = 30;
  c.snapshot_every = 5;
  c.max_holes = 1;
  const auto dir = scratch("run");
  std::filesystem::remove_all(dir);
  c.output_dir = dir.string();
  const auto r = optimize(c);
  for (int k = 0; k <= 30; k += 5) {
    const auto raster = raster_from_pixels(read_pgm(dir / ("binary_" + std::to_string(k) + ".pgm")));
    CHECK(zero_dim_objective(raster, c.threshold).n0 == r.history[k].n0);
    CHECK(static_cast<int>(detect_holes(raster, c.threshold).holes.size()) == r.history[k].n1);
    read_reference(dir / ("snapshot_" + std::to_string(k) + ".pgm"));
  }
  CHECK(slurp(dir / "history.csv") == history_csv(r.history));
  std::filesystem::remove_all(dir);
}
