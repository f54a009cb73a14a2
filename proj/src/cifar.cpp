#include <filesystem>
#include <fstream>

#include "ssdef/data.hpp"

namespace ssdef {

namespace {

constexpr std::size_t kRecordBytes = 3073;  // 1 label + 3*32*32 pixels
constexpr std::size_t kRecordsPerFile = 10000;

void read_records_into(Dataset& d, const std::string& file,
                       std::size_t expected_records) {
  std::ifstream f(file, std::ios::binary | std::ios::ate);
  if (!f) throw DataError("cifar10: missing file: " + file);
  const std::size_t size = static_cast<std::size_t>(f.tellg());
  if (expected_records > 0 && size != expected_records * kRecordBytes)
    throw DataError("cifar10: " + file + " has " + std::to_string(size) +
                    " bytes, expected " + std::to_string(expected_records * kRecordBytes));
  if (size % kRecordBytes != 0)
    throw DataError("cifar10: " + file + " truncated at offset " +
                    std::to_string(size - size % kRecordBytes) +
                    " (partial record of " + std::to_string(size % kRecordBytes) +
                    " bytes)");
  f.seekg(0);
  const std::size_t n = size / kRecordBytes;
  std::vector<std::uint8_t> rec(kRecordBytes);
  for (std::size_t i = 0; i < n; ++i) {
    if (!f.read(reinterpret_cast<char*>(rec.data()), kRecordBytes))
      throw DataError("cifar10: short read in " + file + " at offset " +
                      std::to_string(i * kRecordBytes));
    if (rec[0] >= d.num_classes)
      throw DataError("cifar10: bad label byte " + std::to_string(rec[0]) + " in " +
                      file + " at offset " + std::to_string(i * kRecordBytes));
    d.labels.push_back(rec[0]);
    d.pixels.insert(d.pixels.end(), rec.begin() + 1, rec.end());
  }
}

}  // namespace

Dataset load_cifar_records(const std::string& file, int num_classes, Split split) {
  Dataset d;
  d.num_classes = num_classes;
  d.split = split;
  read_records_into(d, file, 0);
  d.recompute_hash();
  d.validate();
  return d;
}

void write_cifar_records(const Dataset& d, const std::string& file) {
  require(d.channels == 3 && d.height == 32 && d.width == 32,
          "write_cifar_records: layout requires 3x32x32 images");
  std::ofstream f(file, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cifar10: cannot open for write: " + file);
  const std::size_t n = d.image_bytes();
  for (std::size_t i = 0; i < d.size(); ++i) {
    f.put(static_cast<char>(d.labels[i]));
    f.write(reinterpret_cast<const char*>(d.pixels.data() + i * n),
            static_cast<std::streamsize>(n));
  }
  if (!f) throw DataError("cifar10: write failed: " + file);
}

Cifar10 load_cifar10(const std::string& dir) {
  namespace fs = std::filesystem;
  Cifar10 out;
  out.train.split = Split::Train;
  out.test.split = Split::Test;
  for (int i = 1; i <= 5; ++i) {
    const std::string file = (fs::path(dir) / ("data_batch_" + std::to_string(i) + ".bin")).string();
    read_records_into(out.train, file, kRecordsPerFile);
  }
  read_records_into(out.test, (fs::path(dir) / "test_batch.bin").string(), kRecordsPerFile);
  out.train.recompute_hash();
  out.test.recompute_hash();
  out.train.validate();
  out.test.validate();
  return out;
}

void export_cifar10(const Dataset& train, const Dataset& test, const std::string& dir) {
  namespace fs = std::filesystem;
  require(train.size() == 5 * kRecordsPerFile,
          "export_cifar10: train split must hold 50000 records");
  require(test.size() == kRecordsPerFile,
          "export_cifar10: test split must hold 10000 records");
  fs::create_directories(dir);
  const std::size_t n = train.image_bytes();
  for (int i = 0; i < 5; ++i) {
    Dataset part;
    part.num_classes = train.num_classes;
    part.labels.assign(train.labels.begin() + i * kRecordsPerFile,
                       train.labels.begin() + (i + 1) * kRecordsPerFile);
    part.pixels.assign(train.pixels.begin() + i * kRecordsPerFile * n,
                       train.pixels.begin() + (i + 1) * kRecordsPerFile * n);
    write_cifar_records(part,
                        (fs::path(dir) / ("data_batch_" + std::to_string(i + 1) + ".bin")).string());
  }
  write_cifar_records(test, (fs::path(dir) / "test_batch.bin").string());
}

}  // namespace ssdef
