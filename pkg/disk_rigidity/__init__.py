from disk_rigidity.registration import make, register, registry

register(id="curvature", entry_point="disk_rigidity.experiments:curvature",
         description="curvature sweep of the deformation against K <= -1 + margin")
register(id="moebius", entry_point="disk_rigidity.experiments:moebius",
         description="cross-ratio deviation of the boundary identity over sampled quadruples")
register(id="schwarzian", entry_point="disk_rigidity.experiments:schwarzian",
         description="integrated Schwarzian by both routes, distance gaps and the ray inequality")
register(id="raytransform", entry_point="disk_rigidity.experiments:raytransform",
         description="ray transform of the deformation over sampled chords and its CDRM sinogram")
register(id="kernel", entry_point="disk_rigidity.experiments:kernel",
         description="ray transform of potential tensors d v for random bump 1-forms")
register(id="decompose", entry_point="disk_rigidity.experiments:decompose",
         description="solenoidal decomposition of the deformation and the grid floor")
register(id="variation", entry_point="disk_rigidity.experiments:variation",
         description="first variation of the Schwarzian and of distances along the family")
register(id="pipeline", entry_point="disk_rigidity.experiments:pipeline",
         description="reconstruction of f_t with f_t* g_t = g0")
register(id="volume", entry_point="disk_rigidity.experiments:volume",
         description="volume estimate for small volume-nonincreasing fields")
