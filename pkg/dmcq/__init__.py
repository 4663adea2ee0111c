'''
Optimal quantization of binary-input discrete memoryless channels and
lookup-table LDPC decoders synthesized from it by density evolution
'''
