#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <string>

#include "holosub/digest.hpp"
#include "holosub/kv.hpp"
#include "holosub/pgm.hpp"

namespace fs = std::filesystem;
using holosub::PgmImage;
namespace kv = holosub::kv;

namespace {
std::string temp_path(const std::string& name) {
    return (fs::temp_directory_path() / name).string();
}
}  // namespace

TEST(Sha256, KnownVectors) {
    EXPECT_EQ(holosub::sha256_hex(""),
              "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    EXPECT_EQ(holosub::sha256_hex("abc"),
              "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    EXPECT_EQ(holosub::sha256_hex(std::string(1000000, 'a')),
              "cdc76e5c9914fb9281a1c7e284d73e67f1809a48a497200e046d39ccc7112cd0");
}

TEST(Kv, ParseSerializeRoundTrip) {
    const std::string text =
        "[dataset]\nvariant=train_circles\nseed=7\n[train]\nepochs=50\nlr0=0.001\n";
    kv::Document doc = kv::parse(text);
    EXPECT_EQ(doc.get("dataset", "variant"), "train_circles");
    EXPECT_EQ(doc.get("train", "epochs"), "50");
    EXPECT_EQ(doc.get("train", "missing", "dflt"), "dflt");
    EXPECT_EQ(kv::serialize(kv::parse(kv::serialize(doc))), kv::serialize(doc));
}

TEST(Kv, CommentsAndBlanksIgnored) {
    kv::Document doc = kv::parse("# header\n\nkey=value\n# trailing\n");
    EXPECT_EQ(doc.get("", "key"), "value");
}

TEST(Kv, MalformedLineRejected) {
    EXPECT_THROW(kv::parse("not a pair\n"), holosub::ValidationError);
}

TEST(Kv, RecordRoundTrip) {
    kv::Record rec{{"file", "3/17.pgm"}, {"label", "3"}, {"area", "512"}};
    const std::string line = kv::serialize_record(rec);
    EXPECT_EQ(line, "file=3/17.pgm label=3 area=512");
    const kv::Record back = kv::parse_record(line);
    EXPECT_EQ(back, rec);
    EXPECT_EQ(kv::record_get(back, "label"), "3");
}

TEST(Pgm, BinaryRoundTrip) {
    PgmImage img;
    img.height = 3;
    img.width = 5;
    img.pixels = {0, 255, 0, 255, 0, 255, 0, 255, 0, 255, 0, 0, 255, 255, 0};
    const std::string path = temp_path("holosub_pgm_test.pgm");
    holosub::write_pgm(path, img);
    const PgmImage back = holosub::read_pgm(path);
    EXPECT_EQ(back.height, img.height);
    EXPECT_EQ(back.width, img.width);
    EXPECT_EQ(back.pixels, img.pixels);
    std::remove(path.c_str());
}

TEST(Pgm, RejectsWrongMagic) {
    const std::string path = temp_path("holosub_bad.pgm");
    {
        std::ofstream out(path, std::ios::binary);
        out << "P2\n2 2\n255\n0 1 2 3\n";
    }
    EXPECT_THROW(holosub::read_pgm(path), holosub::ValidationError);
    std::remove(path.c_str());
}
