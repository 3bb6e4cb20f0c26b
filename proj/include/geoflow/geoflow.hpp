#pragma once

#include "geoflow/boundary.hpp"
#include "geoflow/classify.hpp"
#include "geoflow/curve.hpp"
#include "geoflow/errors.hpp"
#include "geoflow/frechet.hpp"
#include "geoflow/io.hpp"
#include "geoflow/local_geometry.hpp"
#include "geoflow/manifold.hpp"
#include "geoflow/principal_flow.hpp"
#include "geoflow/random_sim.hpp"
#include "geoflow/svm.hpp"
#include "geoflow/sweep.hpp"
#include "geoflow/vector_field.hpp"
