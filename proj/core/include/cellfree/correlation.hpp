#pragma once

#include <Eigen/Dense>

namespace cellfree {

// Spatial correlation matrix of a uniform linear array with half-wavelength
// spacing under the local scattering model: multipath angles are Gaussian
// around the nominal azimuth/elevation with the given angular standard
// deviations (all angles in radians). trace(R) = N*beta. Zero spread in both
// dimensions collapses to the rank-1 matrix beta*a(phi,theta)*a^H.
Eigen::MatrixXcd local_scattering(int num_antennas, double azimuth,
                                  double elevation, double asd_azimuth,
                                  double asd_elevation, double beta);

// Uncorrelated fading reference: beta * I_N.
Eigen::MatrixXcd uncorrelated(int num_antennas, double beta);

// Array response vector [a]_m = exp(j*pi*(m-1)*sin(az)*cos(el)).
Eigen::VectorXcd array_response(int num_antennas, double azimuth,
                                double elevation);

// Clips slightly negative eigenvalues (below -1e-9*trace triggers an
// exception; smaller dips are clipped to zero) and rescales to preserve the
// trace. Returns whether a repair was applied via `repaired`.
Eigen::MatrixXcd ensure_psd(const Eigen::MatrixXcd& R, bool* repaired = nullptr);

}  // namespace cellfree
