"""K sweep with remesh-AGE curves; optionally remeshed training items."""
import sys
import time

import numpy as np

import wavemesh as wm
from wavemesh import network as nw
from wavemesh import corresp
from wavemesh.curvature import estimate_frames
from wavemesh.operators import directional_operators
from wavemesh.spectrum import solve_eigs, clamp_k
from wavemesh.wavelets import build_filterbank, KernelSpec

RES = 6
template = wm.gen_base('bar', RES)
N = template.n_vertices
deforms = [('bend', 0.9), ('bend', -0.9), ('twist', 0.35), ('twist', -0.35)]
held = ('bend', 0.5)
train_meshes = [wm.deform(template, m, g) for m, g in deforms]
test_mesh = wm.deform(template, *held)
remesh_mesh, _ = wm.remesh(test_mesh)

names = ['template'] + [f'train{i}' for i in range(4)] + ['test', 'remesh']
meshes = dict(zip(names, [template] + train_meshes + [test_mesh, remesh_mesh]))

SP = {}
def spectra_for(key, k):
    tag = (key, k)
    if tag not in SP:
        mesh = meshes[key]
        frames = estimate_frames(mesh)
        ops = directional_operators(mesh, frames,
                                    wm.AnisoConfig(alpha=50.0, directions=4))
        SP[tag] = [solve_eigs(o, clamp_k(k, mesh.n_vertices)) for o in ops]
    return SP[tag]

BK = {}
def banks_for(k):
    if k in BK:
        return BK[k]
    lam_max = max(s.lambda_max for key in ['train0','train1','train2','train3']
                  for s in spectra_for(key, k))
    kern = KernelSpec.mexican_hat(lam_max, 4, tighten=False)
    BK[k] = {key: build_filterbank(spectra_for(key, k), kern) for key in names}
    return BK[k]

gt = np.arange(N)
rows_test = corresp.geodesic_rows(test_mesh, np.arange(N))
ra_test = np.sqrt(test_mesh.total_area)
rows_rm = corresp.geodesic_rows(remesh_mesh, np.arange(N))
ra_rm = np.sqrt(remesh_mesh.total_area)

def run(k, lr, perturb, seed, epochs):
    banks = banks_for(k)
    items = [nw.TrainItem(coords=m.vertices, labels=gt, bank=banks[f'train{i}'],
                          name=f'train{i}') for i, m in enumerate(train_meshes)]
    cfg = nw.ModelConfig(n_classes=N, encoder_dims=(64, 64), conv_layers=3,
                         directions=4, scales=4, perturb=perturb, seed=seed)
    model = nw.Model.initialize(cfg, N)
    curve, curve_rm = [], []
    def snap(model):
        dt_tpl = nw.descriptors(model, template.vertices, banks['template'])
        d_test = nw.descriptors(model, test_mesh.vertices, banks['test'])
        c1 = corresp.match_nn(dt_tpl, d_test)
        curve.append(float((rows_test[gt, c1] / ra_test).mean() * 100))
        d_rm = nw.descriptors(model, remesh_mesh.vertices, banks['remesh'])
        c2 = corresp.match_nn(dt_tpl, d_rm)
        curve_rm.append(float((rows_rm[gt, c2] / ra_rm).mean() * 100))
    snap(model)
    nw.train(model, items, epochs=epochs, lr=lr,
             on_epoch=lambda m, e: snap(m))
    return curve, curve_rm

for k in (int(sys.argv[1]) if len(sys.argv) > 1 else 48,):
    for perturb in (True, False):
        t0 = time.time()
        curve, curve_rm = run(k, 3e-4, perturb, 0, 40)
        reach = next((i for i, a in enumerate(curve) if a < 5.0), None)
        label = 'P' if perturb else 'V'
        ratios = [r / max(o, 1e-9) for o, r in zip(curve, curve_rm)]
        print(f'{label} k={k}: reach={reach} final={curve[-1]:.2f} '
              f'remesh={curve_rm[-1]:.2f} (x{ratios[-1]:.2f}) [{time.time()-t0:.0f}s]')
        print('  orig  :', ' '.join(f'{a:.1f}' for a in curve))
        print('  remesh:', ' '.join(f'{a:.1f}' for a in curve_rm))
        print('  ratio :', ' '.join(f'{a:.1f}' for a in ratios))
