#include "dmps/datasets.hpp"

#include <sstream>

#ifdef DMPS_HAVE_HDF5
#include <hdf5.h>
#endif

namespace dmps {
namespace {

std::string shape_message(const GluonSource& src) {
  std::ostringstream os;
  os << "expected a " << src.expected_jets << " x " << kGluonParticles << " x " << kGluonFeatures
     << " array in dataset '" << src.dataset << "'";
  return os.str();
}

#ifdef DMPS_HAVE_HDF5
// Closes an HDF5 handle on scope exit.
class H5Handle {
 public:
  H5Handle(hid_t id, herr_t (*close)(hid_t)) : id_(id), close_(close) {}
  ~H5Handle() {
    if (id_ >= 0) close_(id_);
  }
  H5Handle(const H5Handle&) = delete;
  H5Handle& operator=(const H5Handle&) = delete;
  hid_t get() const { return id_; }
  bool valid() const { return id_ >= 0; }

 private:
  hid_t id_;
  herr_t (*close_)(hid_t);
};
#endif

}  // namespace

Matrix load_gluon_slice(const GluonSource& src, Index particle_index) {
  if (particle_index < 0 || particle_index >= kGluonParticles) {
    std::ostringstream os;
    os << "gluon particle index must lie in [0, " << kGluonParticles - 1 << "], got "
       << particle_index;
    throw InvalidInputError(os.str());
  }
#ifdef DMPS_HAVE_HDF5
  H5Eset_auto2(H5E_DEFAULT, nullptr, nullptr);
  const std::string path = src.path.string();
  H5Handle file(H5Fopen(path.c_str(), H5F_ACC_RDONLY, H5P_DEFAULT), H5Fclose);
  if (!file.valid()) throw IoError("cannot open gluon file '" + path + "'; " + shape_message(src));
  H5Handle dset(H5Dopen2(file.get(), src.dataset.c_str(), H5P_DEFAULT), H5Dclose);
  if (!dset.valid()) {
    throw IoError("gluon file '" + path + "' has no dataset '" + src.dataset + "'; " +
                  shape_message(src));
  }
  H5Handle space(H5Dget_space(dset.get()), H5Sclose);
  hsize_t dims[3] = {0, 0, 0};
  if (H5Sget_simple_extent_ndims(space.get()) != 3 ||
      H5Sget_simple_extent_dims(space.get(), dims, nullptr) != 3 ||
      dims[0] != static_cast<hsize_t>(src.expected_jets) ||
      dims[1] != static_cast<hsize_t>(kGluonParticles) ||
      dims[2] != static_cast<hsize_t>(kGluonFeatures)) {
    std::ostringstream os;
    os << "gluon file '" << path << "' has shape " << dims[0] << " x " << dims[1] << " x "
       << dims[2] << "; " << shape_message(src);
    throw IoError(os.str());
  }
  const hsize_t start[3] = {0, static_cast<hsize_t>(particle_index), 0};
  const hsize_t count[3] = {dims[0], 1, 3};
  if (H5Sselect_hyperslab(space.get(), H5S_SELECT_SET, start, nullptr, count, nullptr) < 0) {
    throw IoError("gluon: failed to select particle slice");
  }
  const hsize_t mem_dims[2] = {dims[0], 3};
  H5Handle mem(H5Screate_simple(2, mem_dims, nullptr), H5Sclose);
  Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor> buf(static_cast<Index>(dims[0]), 3);
  if (H5Dread(dset.get(), H5T_NATIVE_DOUBLE, mem.get(), space.get(), H5P_DEFAULT, buf.data()) < 0) {
    throw IoError("gluon: failed to read '" + path + "'; " + shape_message(src));
  }
  Matrix out = buf;
  if (!out.allFinite()) throw IoError("gluon: file contains non-finite values");
  return out;
#else
  throw IoError("this build has no HDF5 support; cannot read '" + src.path.string() + "'");
#endif
}

}  // namespace dmps
