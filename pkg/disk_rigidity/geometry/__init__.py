from disk_rigidity.geometry.fields import (ChartPoint, IdealPoint, MetricFamily, MetricField, OneFormField,
                                           SymTensorField)
from disk_rigidity.geometry.families import build_family, hyperbolic_metric
from disk_rigidity.geometry.geodesics import (GeodesicPath, distance, geodesic_between_ideals, ideal_endpoint,
                                              integrate_ivp, ray_from)
