// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <sstream>

#include "motif/config.hpp"

using namespace motif;

TEST(Config, ParsesKeyValueLinesWithComments) {
  std::stringstream in("# experiment\nmodel = lstm\n\n  dim=16   # width\nsoft_select = yes\n");
  const KeyValues kv = KeyValues::parse(in);
  EXPECT_EQ(kv.str("model"), "lstm");
  EXPECT_EQ(kv.count("dim", 0), 16u);
  EXPECT_TRUE(kv.flag("soft_select", false));
  EXPECT_FALSE(kv.has("lr"));
}

TEST(Config, ReportsMalformedLines) {
  std::stringstream in("dim = 4\njust words\n");
  try {
    KeyValues::parse(in);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line, 2u);
  }
  std::stringstream nokey(" = 3\n");
  EXPECT_THROW(KeyValues::parse(nokey), ParseError);
  EXPECT_THROW(KeyValues::load("/nonexistent/motif.cfg"), ConfigError);
}

TEST(Config, LaterLayersOverrideEarlier) {
  KeyValues file, flags;
  file.set("dim", "16");
  file.set("lr", "0.01");
  flags.set("dim", "32");
  const KeyValues r = default_config().merged(file).merged(flags);
  EXPECT_EQ(r.count("dim", 0), 32u);
  EXPECT_DOUBLE_EQ(r.num("lr", 0), 0.01);
  EXPECT_EQ(r.str("model"), "motifnet");
}

TEST(Config, ResolvedConfigRoundTrips) {
  KeyValues over;
  over.set("backend", "tree");
  over.set("n_priority", "8");
  const KeyValues r = default_config().merged(over);
  std::stringstream buf;
  r.write(buf);
  const KeyValues back = KeyValues::parse(buf);
  EXPECT_EQ(back.items(), r.items());
  const ModelConfig c = model_config(back, 12);
  EXPECT_EQ(c.backend, Backend::Tree);
  EXPECT_EQ(c.n_priority, 8u);
  EXPECT_EQ(c.alphabet_size, 12u);
}

TEST(Config, DefaultsBuildValidObjects) {
  const KeyValues d = default_config();
  const ModelConfig c = model_config(d, 12);
  const ModelConfig ref;
  EXPECT_EQ(c.dim, ref.dim);
  EXPECT_EQ(c.d_max, ref.d_max);
  const TrainOptions t = train_options(d);
  EXPECT_EQ(t.max_strikes, 3u);
  EXPECT_DOUBLE_EQ(t.adam.beta1, 0.9);
  EXPECT_DOUBLE_EQ(t.adam.beta2, 0.999);
}

TEST(Config, SeedDrivesInitAndShuffle) {
  KeyValues a = default_config(), b = default_config();
  b.set("seed", "5");
  EXPECT_NE(train_options(a).init_seed, train_options(b).init_seed);
  EXPECT_NE(train_options(b).init_seed, train_options(b).shuffle_seed);
}

TEST(Config, TypedGettersRejectBadValues) {
  KeyValues kv;
  kv.set("dim", "4.5");
  kv.set("lr", "fast");
  kv.set("soft_select", "maybe");
  kv.set("dims", "2, 4,8");
  kv.set("model", "transformer");
  EXPECT_THROW(kv.count("dim", 0), ConfigError);
  EXPECT_THROW(kv.num("lr", 0), ConfigError);
  EXPECT_THROW(kv.flag("soft_select", false), ConfigError);
  EXPECT_EQ(kv.counts("dims", {}), (std::vector<std::size_t>{2, 4, 8}));
  EXPECT_EQ(kv.counts("absent", {1}), (std::vector<std::size_t>{1}));
  EXPECT_THROW(model_config(kv, 12), ConfigError);
  KeyValues zero = default_config();
  zero.set("max_strikes", "0");
  EXPECT_THROW(train_options(zero), ConfigError);
}
